"""Hierarchical pseudo-mask generation from patch features."""

from ._core import (
    AnnotationSet,
    BinaryMask,
    Error,
    FeatureGrid,
    PipelineConfig,
    ScoredMask,
    center_point,
    conquer,
    decode_feature_grid,
    divide,
    encode_feature_grid,
    evaluate,
    fuse,
    iou,
    maskcut,
    ncut_second_eigvec,
    nms,
    read_annotation_set,
    read_feature_grid,
    run_pipeline,
    self_train_merge,
    write_annotation_set,
    write_feature_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
