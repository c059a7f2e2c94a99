import math

import numpy as np
import pytest

import projdebias as pd


def test_pca_and_projection():
    rows = np.array([[1.0, 0.1], [-1.0, -0.1], [0.2, 1.0], [-0.2, -1.0]])
    basis = pd.pca(rows, 2)
    assert len(basis) == 2
    assert basis.vectors[0][0] == pytest.approx(0.7245473127905081, abs=1e-10)
    assert sum(basis.weights) == pytest.approx(1.0)
    h = np.array([0.3, -2.0])
    hard = pd.project_out(h, basis.truncated(1))
    assert np.dot(hard, basis.vectors[0]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(pd.Error, match="insufficient rank"):
        pd.pca(np.array([[2.0, 0.0], [2.0, 0.0]]), 1)


def test_grid_labels():
    grid = pd.enumerate_grid()
    assert len(grid) == 74
    assert grid[0].label == "sent(0)"
    assert pd.parse_config_label("final(0,1,0)") == pd.parse_config_text("level=final n_fin=0 c_fin=1 n_p=0")
    with pytest.raises(pd.Error):
        pd.parse_config_label("final(0,1)")


def test_metrics_reproduce_published_values():
    a = pd.TripleScores("a", 0.9994, 0.9836, 0.0151, 0.9894, 0.9997, 0.9985)
    b = pd.TripleScores("b", 0.9986, 0.0253, 0.2752, 0.9888, 0.9930, 0.9955)
    assert pd.pair_strength(a) == pytest.approx(0.0055, abs=1e-12)
    assert pd.pair_strength(b) == pytest.approx(0.9691, abs=1e-12)
    assert pd.pair_distance(a) == pytest.approx(0.9834, abs=1e-12)
    assert pd.strength_S([a, b], 0.5) == pytest.approx(0.9691, abs=1e-12)
    assert pd.fairness_score(0.0976, 0.3840) == pytest.approx(0.0375, abs=5e-4)


def test_spearman_and_probes():
    r = pd.spearman([1, 2, 2, 4, 5], [3, 1, 4, 4, 5])
    assert r["rho"] == pytest.approx(0.76315789473684215, abs=1e-12)
    assert r["p_value"] == pytest.approx(0.2, abs=1e-12)
    assert r["method"] == "permutation"
    probes = pd.generate_probes(pd.default_occupations(), pd.default_templates())
    assert pd.sentence_pair_count(probes) == 10824


def test_encoder_end_to_end(tmp_path):
    enc = pd.Encoder.seeded(3, d_model=16, n_layers=2, n_heads=2, max_len=48)
    out = enc.run("the man fixed the engine.", "he drove the truck.")
    assert sum(out["nsp"]) == pytest.approx(1.0)
    assert sum(out["nli"]) == pytest.approx(1.0)
    subspaces = enc.estimate_subspaces(pd.default_gender_pairs())
    assert len(subspaces) == 3 + 2 * 3
    config = pd.parse_config_label("sent(0)")
    debiased = enc.run("the man fixed the engine.", "he drove the truck.", config, subspaces)
    g = subspaces.basis("sent").vectors[0]
    assert abs(np.dot(debiased["sent"], g)) < 1e-12
    enc.save(tmp_path / "m.manifest")
    again = pd.Encoder.load(tmp_path / "m.manifest").run("the man fixed the engine.", "he drove the truck.")
    assert again["nsp"] == out["nsp"]
    with pytest.raises(pd.InputError):
        pd.Encoder.load(tmp_path / "missing.manifest")
    assert math.isfinite(out["nsp"][0])
