import json
import math

import numpy as np
import pytest

import facetell

SMALL = json.dumps({
    "layout": [{"name": "A", "apps": ["a1", "a2"]}, {"name": "B", "apps": ["b1"]}],
    "dataset": {"frames_per_app": 12, "train_sessions": 1, "test_sessions": 1},
    "seed": 3,
})


def split_screen(left, right, w=64, h=36):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, : w // 2] = left
    img[:, w // 2 :] = right
    return img


def test_ks():
    d, p = facetell.ks_test([1, 2, 3], [1, 2, 3])
    assert d == 0 and p == 1
    d, p = facetell.ks_test([0.0] * 20, [1.0] * 20)
    assert d == 1 and p < 1e-6
    assert facetell.ks_pvalue(0.5, 20, 20) == pytest.approx(0.0081616786591430748, abs=1e-12)


def test_planar_matches_per_pair():
    emitters = [((x, y, 0.0), (50.0, 20.0, 80.0)) for x in (-0.1, 0.0, 0.1) for y in (-0.05, 0.05)]
    args = dict(position=(0.02, 0.01, 0.45), normal=(0.1, 0.0, -1.0), emitters=emitters,
                screen_normal=(0, 0, 1), camera=(0, 0.1, 0), ambient=(0.2, 0.2, 0.2))
    a = facetell.reflected_intensity(**args)
    b = facetell.reflected_intensity(**args, planar=True)
    for u, v in zip(a, b):
        assert math.isclose(u, v, rel_tol=1e-9)


def test_render_asymmetry():
    face = facetell.render_face(split_screen((255, 0, 0), (0, 0, 255)))
    assert face.dtype == np.uint8 and face.shape[2] == 3
    half = face.shape[1] // 2
    assert face[:, half:, 2].mean() > face[:, :half, 2].mean()
    assert face[:, :half, 0].mean() > face[:, half:, 0].mean()


def test_config_and_errors():
    cfg = json.loads(facetell.default_config())
    assert cfg["hlc"]["sigma_s"] == 0.9
    assert json.loads(facetell.validate_config(SMALL))["seed"] == 3
    with pytest.raises(ValueError):
        facetell.validate_config('{"hlc": {"sigma_s": 2}}')
    with pytest.raises(ValueError):
        facetell.render_face(np.zeros((4, 4), dtype=np.uint8))


def test_weight_curves_and_mdc():
    curves = facetell.simulate_weight_curves()
    assert len(curves) == 3 and len(curves[0]["diffuse"]) == 101
    cfg = json.loads(facetell.default_config())
    cfg["mdc"]["fractions"] = [0.0625, 1.0]
    r = facetell.mdc_search(json.dumps(cfg))
    assert [row["fraction"] for row in r["rows"]] == [0.0625, 1.0]
    assert r["rows"][1]["min_p"] <= r["rows"][0]["min_p"]


def test_dataset_train_attack():
    frames = facetell.generate_dataset(SMALL)
    assert len(frames) == 72
    assert frames[0]["image"].shape == (32, 32, 3)
    assert len(facetell.extract_features(frames[0]["image"], SMALL)) == 54

    model, losses = facetell.train_model(SMALL)
    assert losses and all(math.isfinite(l[3]) for l in losses)
    p = facetell.predict(model, frames[0]["image"])
    assert 0 <= p["label"] < 3
    assert sum(p["category_probs"]) == pytest.approx(1.0)

    test = [f for f in frames if f["split"] == "test"]
    r = facetell.attack(model, [f["image"] for f in test], [f["label"] for f in test])
    assert r["accuracy_raw"] >= 0.9
    assert r["corrected"] == facetell.hlc_correct(r["predicted"])


def test_hlc():
    y = [0] * 20
    y[4] = 1
    assert facetell.hlc_correct(y) == [0] * 20
    alt = [0, 1] * 6
    assert facetell.hlc_correct(alt)[:11] == [facetell.UNKNOWN] * 11
    rows = facetell.hlc_sweep([0] * 30 + [1] * 30, [0] * 30 + [1] * 30)
    assert len(rows) == 256 and all(r[4] == 1.0 for r in rows)
    assert facetell.app_palette(0).shape == (144, 256, 3)
