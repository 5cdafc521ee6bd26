#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dnc/annotation.hpp"
#include "dnc/eval.hpp"
#include "dnc/feature_grid.hpp"

namespace dnc {

// UFG1 feature grid files:
//   bytes 0..3   "UFG1"
//   bytes 4..19  gh, gw, dim, patch_size as little-endian uint32
//   then         gh*gw*dim little-endian IEEE-754 float32, ordered (y, x, channel)
inline constexpr std::string_view kFeatureGridMagic = "UFG1";

std::vector<std::uint8_t> encode_feature_grid(const FeatureGrid& grid);
/// Distinct ErrorKinds for bad magic, truncated payload, trailing bytes and
/// non-finite values.
FeatureGrid decode_feature_grid(std::span<const std::uint8_t> bytes);

FeatureGrid read_feature_grid(const std::filesystem::path& path);
void write_feature_grid(const std::filesystem::path& path, const FeatureGrid& grid);

/// JSON text for an annotation set. Deterministic for identical input.
std::string annotation_set_to_json(const AnnotationSet& set);
/// Parses and validates; schema errors name the offending JSON pointer.
AnnotationSet annotation_set_from_json(std::string_view text);

AnnotationSet read_annotation_set(const std::filesystem::path& path);
void write_annotation_set(const std::filesystem::path& path, const AnnotationSet& set);

std::string eval_report_to_json(const EvalReport& report);

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace dnc
