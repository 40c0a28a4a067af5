import numpy as np
import pytest

import coreselect as cs


def test_feature_round_trip(tmp_path):
    x = np.arange(6, dtype=np.float32).reshape(3, 2)
    cs.write_feature_space(cs.FeatureSpace("a", x, ["p", "q", "r"]), tmp_path / "a.feat")
    assert (tmp_path / "a.ids").read_text().split() == ["p", "q", "r"]
    back = cs.load_feature_space(tmp_path / "a.feat")
    assert back.ids == ["p", "q", "r"]
    np.testing.assert_array_equal(back.vectors, x)


def test_metadata_rejects_zero_denominator(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("id,loss_with_q,loss_without_q\ns1,1.0,0\n")
    with pytest.raises(ValueError):
        cs.load_sample_meta(path)


def test_quota_worked_examples():
    assert cs.allocate_quotas([1.0, 0.2], [100, 100], 10) == [8, 2]
    scores = cs.score_clusters({"density": [1.0, 0.2], "transferability": [0.0, 0.8]}, "8")
    assert scores == pytest.approx([0.1, 1.1])


def test_samplers():
    x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert cs.svd_leverage_sample(x, 2, rank=2) == [2, 0]
    pts = np.array([[-2.0], [-1.0], [0.0], [1.0], [3.0]])
    assert cs.pca_energy_sample(pts, 2, rank=1) == [4, 0]
    picks, mmd2 = cs.greedy_mmd_trace(np.random.default_rng(0).normal(size=(8, 3)), 8, 1.0)
    assert sorted(picks) == list(range(8))
    assert abs(mmd2[-1]) < 1e-12


def test_kmeans_two_blobs():
    rng = np.random.default_rng(1)
    x = np.vstack([rng.normal(0, 0.5, (30, 2)), rng.normal(20, 0.5, (30, 2))])
    model = cs.kmeans_fit(x, 2, seed=3)
    assert sorted(model.sizes) == [30, 30]
    assert len(set(model.assignments[:30])) == 1


def test_pipeline(tmp_path):
    config = cs.write_synthetic_dataset(tmp_path / "data", n=800, seed=2)
    m = cs.run_selection(config, {"budget_ratio": 0.05, "k": 8, "output_dir": str(tmp_path / "run")})
    assert len(m.selected_ids) == 40
    assert sum(m.quotas) == 40
    summary = cs.report(tmp_path / "run")
    assert summary["budget"] == 40
    ms = cs.sweep(config, [0.02, 0.05], {"k": 8, "output_dir": str(tmp_path / "sweep")})
    assert [len(x.selected_ids) for x in ms] == [16, 40]
    assert ms[1].selected_ids == m.selected_ids


def test_stage_error(tmp_path):
    config = cs.write_synthetic_dataset(tmp_path / "data", n=50, seed=2)
    with pytest.raises(cs.StageError, match="stage=clustering"):
        cs.run_selection(config, {"k": 500, "output_dir": str(tmp_path / "run")})
