#include "dnc/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "dnc/error.hpp"

namespace dnc {

using json = nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
  return v;
}

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorKind::Schema, (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

const json& require(const json& obj, const std::string& pointer, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(pointer, std::string("missing required key '") + key + "'");
  return *it;
}

std::int64_t as_int(const json& v, const std::string& pointer) {
  if (!v.is_number_integer()) schema_error(pointer, "expected an integer");
  return v.get<std::int64_t>();
}

ScoredMask mask_from_json(const json& j, const std::string& pointer, int height, int width) {
  if (!j.is_object()) schema_error(pointer, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "rle" && key != "score" && key != "level" && key != "parent_id" &&
        key != "provenance") {
      schema_error(pointer + "/" + key, "unknown key");
    }
  }
  ScoredMask m;
  m.id = as_int(require(j, pointer, "id"), pointer + "/id");

  const json& rle = require(j, pointer, "rle");
  if (!rle.is_array()) schema_error(pointer + "/rle", "expected an array of run lengths");
  std::vector<std::uint32_t> counts;
  counts.reserve(rle.size());
  for (std::size_t i = 0; i < rle.size(); ++i) {
    const std::string p = pointer + "/rle/" + std::to_string(i);
    const std::int64_t c = as_int(rle[i], p);
    if (c < 0 || c > std::numeric_limits<std::uint32_t>::max()) schema_error(p, "run length out of range");
    counts.push_back(static_cast<std::uint32_t>(c));
  }
  try {
    m.mask = BinaryMask::from_counts(height, width, std::move(counts));
  } catch (const Error& e) {
    schema_error(pointer + "/rle", e.what());
  }

  const json& score = require(j, pointer, "score");
  if (!score.is_number()) schema_error(pointer + "/score", "expected a number");
  m.score = score.get<double>();
  if (!(m.score >= 0.0 && m.score <= 1.0)) schema_error(pointer + "/score", "score outside [0,1]");

  const std::int64_t level = as_int(require(j, pointer, "level"), pointer + "/level");
  if (level < 0 || level > std::numeric_limits<int>::max()) {
    schema_error(pointer + "/level", "level must be a non-negative integer");
  }
  m.level = static_cast<int>(level);

  if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
    m.parent_id = as_int(*it, pointer + "/parent_id");
  }
  if (m.level == 0 && m.parent_id) schema_error(pointer + "/parent_id", "level-0 mask has a parent");
  if (m.level > 0 && !m.parent_id) schema_error(pointer + "/parent_id", "part mask needs a parent");

  if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) schema_error(pointer + "/provenance", "expected a string");
    m.provenance = it->get<std::string>();
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode_feature_grid(const FeatureGrid& grid) {
  static_assert(std::numeric_limits<float>::is_iec559);
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + grid.data.size() * 4);
  out.insert(out.end(), kFeatureGridMagic.begin(), kFeatureGridMagic.end());
  put_u32(out, static_cast<std::uint32_t>(grid.gh));
  put_u32(out, static_cast<std::uint32_t>(grid.gw));
  put_u32(out, static_cast<std::uint32_t>(grid.dim));
  put_u32(out, static_cast<std::uint32_t>(grid.patch_size));
  for (float v : grid.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureGrid decode_feature_grid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureGridMagic.data(), 4) != 0) {
    throw Error(ErrorKind::BadMagic, "bad magic: not a UFG1 feature grid");
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorKind::TruncatedPayload, "truncated payload: header is incomplete");
  }
  const std::uint32_t gh = get_u32(bytes, 4), gw = get_u32(bytes, 8), dim = get_u32(bytes, 12),
                      ps = get_u32(bytes, 16);
  if (gh == 0 || gw == 0 || dim == 0 || ps == 0 || gh > (1u << 16) || gw > (1u << 16) ||
      ps > (1u << 16)) {
    throw Error(ErrorKind::InvalidArgument, "feature grid header has invalid dimensions");
  }
  const std::uint64_t values = static_cast<std::uint64_t>(gh) * gw * dim;
  const std::uint64_t expected = kHeaderBytes + values * 4;
  if (bytes.size() < expected) {
    throw Error(ErrorKind::TruncatedPayload,
                "truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                    std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorKind::TrailingBytes, "trailing bytes after payload: expected " +
                                              std::to_string(expected) + " bytes, got " +
                                              std::to_string(bytes.size()));
  }
  FeatureGrid grid(static_cast<int>(gh), static_cast<int>(gw), static_cast<int>(dim),
                   static_cast<int>(ps));
  for (std::uint64_t i = 0; i < values; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFiniteValue,
                  "non-finite float at payload index " + std::to_string(i));
    }
    grid.data[i] = v;
  }
  return grid;
}

FeatureGrid read_feature_grid(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  return decode_feature_grid(
      std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

void write_feature_grid(const std::filesystem::path& path, const FeatureGrid& grid) {
  const auto bytes = encode_feature_grid(grid);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string annotation_set_to_json(const AnnotationSet& set) {
  json masks = json::array();
  for (const auto& m : set.masks) {
    json jm;
    jm["id"] = m.id;
    jm["rle"] = std::vector<std::uint32_t>(m.mask.counts().begin(), m.mask.counts().end());
    jm["score"] = m.score;
    jm["level"] = m.level;
    if (m.parent_id) jm["parent_id"] = *m.parent_id;
    if (!m.provenance.empty()) jm["provenance"] = m.provenance;
    masks.push_back(std::move(jm));
  }
  json doc;
  doc["image_id"] = set.image_id;
  doc["height"] = set.height;
  doc["width"] = set.width;
  doc["masks"] = std::move(masks);
  return doc.dump() + "\n";
}

AnnotationSet annotation_set_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, std::string("/: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_error("", "expected an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "image_id" && key != "height" && key != "width" && key != "masks") {
      schema_error("/" + key, "unknown key");
    }
  }
  AnnotationSet set;
  const json& id = require(doc, "", "image_id");
  if (id.is_string()) {
    set.image_id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    set.image_id = std::to_string(id.get<std::int64_t>());
  } else {
    schema_error("/image_id", "expected a string or integer");
  }
  const std::int64_t h = as_int(require(doc, "", "height"), "/height");
  const std::int64_t w = as_int(require(doc, "", "width"), "/width");
  if (h <= 0 || w <= 0 || h > (1 << 16) || w > (1 << 16)) {
    schema_error(h <= 0 || h > (1 << 16) ? "/height" : "/width", "image size out of range");
  }
  set.height = static_cast<int>(h);
  set.width = static_cast<int>(w);
  const json& masks = require(doc, "", "masks");
  if (!masks.is_array()) schema_error("/masks", "expected an array");
  for (std::size_t i = 0; i < masks.size(); ++i) {
    set.masks.push_back(
        mask_from_json(masks[i], "/masks/" + std::to_string(i), set.height, set.width));
  }
  try {
    set.validate();
  } catch (const Error& e) {
    schema_error("/masks", e.what());
  }
  return set;
}

AnnotationSet read_annotation_set(const std::filesystem::path& path) {
  try {
    return annotation_set_from_json(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    throw;
  }
}

void write_annotation_set(const std::filesystem::path& path, const AnnotationSet& set) {
  set.validate();
  write_file_atomic(path, annotation_set_to_json(set));
}

std::string eval_report_to_json(const EvalReport& r) {
  json doc;
  doc["ar_1000"] = r.ar_1000;
  doc["ar_s"] = r.ar_s;
  doc["ar_m"] = r.ar_m;
  doc["ar_l"] = r.ar_l;
  doc["ap"] = r.ap;
  doc["iou_thresholds"] = r.iou_thresholds;
  doc["recall_curve"] = r.recall_curve;
  doc["max_iou"] = r.max_iou;
  doc["oracle_iou"] = r.oracle_iou;
  doc["images"] = r.images;
  doc["gt_masks"] = r.gt_masks;
  doc["pred_masks"] = r.pred_masks;
  return doc.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::Io, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dnc
