import numpy as np
import pytest

import tgseg


def test_kkv_matches_numpy_single_head():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(5, 4))
    wk, wq, wv = (rng.normal(size=(4, 4)) for _ in range(3))
    k = f @ wk
    logits = k @ k.T / 2.0
    a = np.exp(logits - logits.max(axis=1, keepdims=True))
    a /= a.sum(axis=1, keepdims=True)
    out = tgseg.attention(f, wk, wq, wv, heads=1, mode="kkv")
    np.testing.assert_allclose(out, a @ (f @ wv), atol=1e-10)


def test_dual_path_alt_absent_before_delta():
    rng = np.random.default_rng(4)
    s = rng.normal(size=(5, 4))
    w = rng.normal(size=(4, 4))
    nxt, alt = tgseg.dual_path_step(s, None, 1, 2, w, w, w)
    assert nxt.shape == (5, 4)
    assert alt is None


def test_extract_points_row_major():
    lattice = np.linspace(0, 1, 16).reshape(4, 4)
    pos, neg = tgseg.extract_points(lattice, 0.9, 64, 64)
    assert len(pos) == len(neg) >= 1
    assert pos == [(40.0, 56.0), (56.0, 56.0)]
    assert neg == [(8.0, 8.0), (24.0, 8.0)]


def test_max_iou_box_picks_larger_blob():
    m = np.zeros((20, 20), np.uint8)
    m[2:12, 2:12] = 1
    m[17, 17] = 1
    assert tgseg.max_iou_box(m) == (2, 2, 12, 12)
    assert tgseg.max_iou_box(np.zeros((4, 4), np.uint8)) is None


def test_metrics_perfect_prediction():
    gt = np.zeros((16, 16), np.uint8)
    gt[4:10, 3:12] = 1
    r = tgseg.evaluate(gt.astype(float), gt)
    assert r["mae"] == 0.0
    assert r["f_beta"] == pytest.approx(1.0)
    assert r["e_phi"] == pytest.approx(1.0, abs=1e-6)
    assert r["s_alpha"] >= 0.99


def test_parse_keyword():
    assert tgseg.parse_keyword("I think it is a grasshopper, maybe.") == "grasshopper"
    assert tgseg.parse_keyword("...") is None


def test_contract_violation_is_value_error():
    with pytest.raises(ValueError):
        tgseg.reweight(np.zeros((4, 4, 3)), np.zeros((3, 3)), 0.3)


def test_synthetic_pipeline_is_deterministic():
    a = tgseg.segment_synthetic(0)
    b = tgseg.segment_synthetic(0)
    assert len(a["masks"]) == 6
    assert 1 <= a["selected"] <= 6
    for x, y in zip(a["masks"], b["masks"]):
        np.testing.assert_array_equal(x, y)
    final = a["masks"][a["selected"] - 1]
    assert tgseg.iou(final, a["gt"]) > 0.3


def test_encoder_separates_planted_blob():
    scene = tgseg.make_scene(1)
    enc = tgseg.MockEncoder()
    _, alt = enc.encode_image(scene["image"])
    t = enc.encode_text(scene["fore_keyword"])
    sim = alt @ t / np.linalg.norm(alt, axis=1)
    g = enc.grid_side
    gt = scene["gt"].reshape(g, 64 // g, g, 64 // g).mean(axis=(1, 3)).ravel()
    assert sim[gt > 0.5].mean() > sim[gt < 0.5].mean()


def test_run_dataset(tmp_path):
    tgseg.write_synthetic_dataset(tmp_path / "ds", count=2)
    s = tgseg.run_dataset(tmp_path / "ds", tmp_path / "out", iterations=2)
    assert s["succeeded"] == 2 and s["failed"] == 0
    assert (tmp_path / "out" / "metrics.csv").exists()
    assert sorted(p.name for p in (tmp_path / "out" / "masks").iterdir()) == ["scene_000.png", "scene_001.png"]
