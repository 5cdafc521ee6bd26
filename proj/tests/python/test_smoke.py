import numpy as np
import pytest

import dnc


def planted_grid(seed=0, side=16, dim=16, patch=8):
    """Two orthogonal blocks on a background, each split into two halves."""
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.normal(size=(dim, dim)))[0]
    labels = np.zeros((side, side), dtype=int)
    labels[2:8, 2:6] = 1
    labels[2:8, 6:10] = 2
    labels[10:15, 9:12] = 3
    labels[10:15, 12:15] = 4
    protos = {0: basis[0], 1: basis[1], 2: 0.45 * basis[1] + 0.893 * basis[2],
              3: basis[3], 4: 0.45 * basis[3] + 0.893 * basis[4]}
    feats = np.stack([protos[v] for v in labels.ravel()]).reshape(side, side, dim)
    feats = feats + 0.01 * rng.normal(size=feats.shape)
    return dnc.FeatureGrid(feats.astype(np.float32), patch), labels


def block_mask(labels, values, patch=8):
    return np.kron(np.isin(labels, values), np.ones((patch, patch), dtype=bool))


def test_mask_round_trip_and_iou():
    a = np.zeros((6, 5), dtype=bool)
    a[1:4, 1:3] = True
    m = dnc.BinaryMask(a)
    assert m.area == 6
    assert np.array_equal(m.to_array(), a)
    assert m.counts[0] == 7  # column-major, background first
    b = np.zeros_like(a)
    b[1:4, 2:4] = True
    assert dnc.iou(m, dnc.BinaryMask(b)) == pytest.approx(3 / 9)
    assert dnc.center_point(m) in {(1, 2), (2, 2)}


def test_eigvec_on_two_cliques():
    w = np.full((6, 6), 1e-5)
    w[:3, :3] = 1
    w[3:, 3:] = 1
    x, lam = dnc.ncut_second_eigvec(w)
    assert lam >= 0
    assert np.sign(x[:3]).tolist() == [np.sign(x[0])] * 3
    assert np.sign(x[0]) != np.sign(x[3])


def test_pipeline_recovers_planted_blocks():
    grid, labels = planted_grid()
    out = dnc.run_pipeline(grid, "img")
    out.validate()
    assert out.height == out.width == 128
    for region in ([1, 2], [3, 4], [1], [2], [3], [4]):
        target = dnc.BinaryMask(block_mask(labels, region))
        assert max(dnc.iou(m.mask, target) for m in out.masks) >= 0.9

    parents = dnc.divide(grid)
    assert len(parents) >= 2
    parts = dnc.conquer(grid, parents[0], thetas=[0.5])
    assert all(p.parent_id == parents[0].id and p.level == 1 for p in parts)


def test_postprocess_and_eval():
    _, labels = planted_grid()
    gt = dnc.AnnotationSet("img", 128, 128, [
        dnc.ScoredMask(i, dnc.BinaryMask(block_mask(labels, [v])), 1.0) for i, v in enumerate([1, 2, 3, 4])])
    assert dnc.fuse(gt, gt) == gt
    assert len(dnc.nms(gt.masks + gt.masks, 0.9)) == 4
    report = dnc.evaluate([gt], [gt])
    assert report["ar_1000"] == pytest.approx(1.0)
    assert report["ap"] == pytest.approx(1.0)
    merged = dnc.self_train_merge(gt, gt)
    assert len(merged.masks) == 4


def test_io_round_trip(tmp_path):
    grid, _ = planted_grid()
    dnc.write_feature_grid(tmp_path / "g.ufg", grid)
    back = dnc.read_feature_grid(tmp_path / "g.ufg")
    assert np.array_equal(back.to_array(), grid.to_array())
    assert back.patch_size == 8

    raw = dnc.encode_feature_grid(grid)
    assert raw[:4] == b"UFG1"
    with pytest.raises(dnc.Error) as err:
        dnc.decode_feature_grid(raw + b"\0")
    assert err.value.kind == "trailing bytes"

    s = dnc.AnnotationSet("img", 4, 4, [dnc.ScoredMask(3, dnc.BinaryMask(np.eye(4, dtype=bool)), 0.5,
                                                      provenance="x")])
    dnc.write_annotation_set(tmp_path / "a.json", s)
    assert dnc.read_annotation_set(tmp_path / "a.json") == s
    assert dnc.AnnotationSet.from_json(s.to_json()) == s


def test_config_errors_are_typed():
    with pytest.raises(dnc.Error) as err:
        dnc.PipelineConfig.parse("tau: 1.5")
    assert err.value.kind == "config error"
    cfg = dnc.PipelineConfig.parse("thetas: [0.7, 0.4]")
    assert cfg.thetas == [0.7, 0.4]
