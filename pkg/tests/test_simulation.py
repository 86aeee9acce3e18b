from pathlib import Path

import numpy as np
import pytest

from moshrink.distributions import rng_stream
from moshrink.exceptions import ChainAbortError, ParameterDomainError, ShapeError
from moshrink.model import read_matrix_csv
from moshrink.simulation import (
    SimConfig, TruthMatrix, config_from_mapping, equicorrelation, fit_replicate, gen_responses,
    make_design, make_toy, make_truth, parse_spec, read_config, run_experiment, simulate_replicate,
    spec_label, sparse_rows_truth,
)

DATA = Path(__file__).parent / "data"


def test_design_moments_and_determinism():
    X = make_design(500, 20, rng_stream(1, "X"))
    assert abs(X.mean()) < 3 / np.sqrt(X.size)
    assert np.all(np.abs(X.var(axis=0, ddof=1) - 1) < 0.2)
    np.testing.assert_array_equal(X, make_design(500, 20, rng_stream(1, "X")))
    with pytest.raises(ParameterDomainError):
        make_design(0, 3, rng_stream(1, "X"))


def test_b0_layout():
    t = make_truth("B0")
    nz = np.flatnonzero(np.any(t.B_true != 0, axis=1))
    assert list(nz) == [0, 1, 2, 17]
    for j, v in zip(nz, (2.0, -3.0, 1.0, 0.3)):
        np.testing.assert_array_equal(t.B_true[j], v)
    np.testing.assert_array_equal(t.zero_mask, t.B_true == 0)


def test_b1_differs_from_b0_in_six_entries():
    b0, b1 = make_truth("B0").B_true, make_truth("B1").B_true
    diff = b0 != b1
    assert diff.sum() == 6
    assert ((b0 == 0) & (b1 != 0)).sum() == 3
    assert ((b0 != 0) & (b1 == 0)).sum() == 3
    assert b1[3, 2] == 0.5 and b1[4, 6] == 0.3 and b1[9, 6] == 1.5
    assert b1[2, 2] == b1[2, 4] == b1[17, 4] == 0.0


def test_truth_domain_errors():
    with pytest.raises(ParameterDomainError):
        make_truth("B0", p=10, K=4)
    with pytest.raises(ParameterDomainError):
        make_truth("B2")


def test_responses_covariance():
    rng = rng_stream(2, "Y")
    X = make_design(5000, 3, rng)
    truth = sparse_rows_truth(3, 4, {0: 1.0})
    Y = gen_responses(X, truth, 0.5, rng)
    R = Y - X @ truth.B_true
    np.testing.assert_allclose(np.cov(R.T), equicorrelation(4, 0.5), atol=0.05)
    Y0 = gen_responses(X, TruthMatrix(np.zeros((3, 4)), np.ones((3, 4), bool)), 0.0, rng)
    C = np.corrcoef(Y0.T)
    assert np.all(np.abs(C[np.triu_indices(4, 1)]) < 0.03 * 3)
    with pytest.raises(ParameterDomainError):
        gen_responses(X, truth, -0.5, rng)  # needs > -1/(K-1) = -1/3
    with pytest.raises(ShapeError):
        gen_responses(X[:, :2], truth, 0.5, rng)


def test_train_and_test_streams_are_disjoint():
    cfg = SimConfig(n=30, n_test=30)
    train, test, _ = simulate_replicate(cfg, 0)
    assert not np.allclose(train.X, test.X)
    again, _, _ = simulate_replicate(cfg, 0)
    np.testing.assert_array_equal(train.Y, again.Y)
    other, _, _ = simulate_replicate(cfg, 1)
    assert not np.allclose(train.X, other.X)


def test_parse_spec_and_labels():
    assert spec_label(parse_spec("MODL:1/p")) == "MODL(a=1/p)"
    assert spec_label(parse_spec("naivedl:0.5")) == "NaiveDL(a=0.5)"
    assert spec_label(parse_spec("MOHS")) == "MOHS"
    with pytest.raises(ValueError):
        parse_spec("MONG:0.5")


def small_config(**kw):
    base = dict(n=60, n_test=40, p=20, K=10, replicates=2, iterations=150, burn_in=50, thin=5,
                families=["MONG", "NaiveNG", "NoShrinkage"], seed=11)
    base.update(kw)
    return SimConfig(**base)


def test_experiment_table_and_determinism():
    cfg = small_config()
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert [r["model"] for r in a.table] == ["MONG", "NaiveNG", "NoShrinkage"]
    assert len(a.replicates) == 6
    assert [(r["replicate"], r["model"]) for r in a.replicates][:3] == [(0, "MONG"), (0, "NaiveNG"), (0, "NoShrinkage")]
    for ra, rb in zip(a.table, b.table):
        assert ra == rb
    mong = a.by_model("MONG")
    assert np.mean([r["mspe"] for r in mong]) == pytest.approx(a.table[0]["mspe"])
    assert a.replicates[0]["rank_order"] is not None and a.replicates[1]["rank_order"] is None
    # MSPE cannot beat the irreducible noise level by more than MC error
    assert all(r["mspe"] > 0.8 for r in a.table)


def test_experiment_worker_pool_gives_identical_results():
    cfg = small_config(replicates=1, families=["MONG", "MOHS"])
    serial = run_experiment(cfg)
    pooled = run_experiment(cfg, workers=2)
    assert serial.table == pooled.table


def test_chain_abort_names_replicate_and_family(monkeypatch):
    import moshrink.simulation as sim

    def boom(*a, **k):
        raise ChainAbortError("non-finite", iteration=3, block="tau")

    monkeypatch.setattr(sim, "run_chain", boom)
    with pytest.raises(ChainAbortError, match="replicate 0, family MONG") as err:
        fit_replicate(small_config(), 0, 0)
    assert err.value.block == "tau"


def test_custom_truth_and_config_layering(tmp_path):
    B = sparse_rows_truth(5, 2, {0: 1.0}).B_true
    cfg = SimConfig(p=5, K=2, scenario="custom", B_true=B)
    np.testing.assert_array_equal(cfg.truth().B_true, B)
    with pytest.raises(ShapeError):
        SimConfig(p=4, K=2, scenario="custom", B_true=B).truth()

    f = tmp_path / "exp.cfg"
    f.write_text("# comment\nreplicates = 3\nscenario = B1\nfamilies = MONG, MODL:1/p\n")
    cfg = config_from_mapping(read_config(f))
    assert cfg.replicates == 3 and cfg.scenario == "B1"
    assert [spec_label(s) for s in cfg.families] == ["MONG", "MODL(a=1/p)"]
    with pytest.raises(ValueError):
        config_from_mapping({"bogus": "1"})
    f.write_text("no equals sign\n")
    with pytest.raises(ValueError, match="line 1"):
        read_config(f)


def test_desk_defaults():
    cfg = SimConfig()
    assert (cfg.replicates, cfg.iterations, cfg.burn_in) == (10, 9000, 1000)
    assert (cfg.n, cfg.n_test, cfg.p, cfg.K, cfg.psi_offdiag) == (500, 500, 20, 10, 0.5)
    assert len(cfg.families) == 9


def test_shipped_toy_fixture_matches_generator():
    toy = make_toy()
    X, xn = read_matrix_csv(DATA / "toy_X.csv")
    Y, yn = read_matrix_csv(DATA / "toy_Y.csv")
    np.testing.assert_array_equal(X, toy.X)
    np.testing.assert_array_equal(Y, toy.Y)
    assert X.shape == (40, 3) and Y.shape == (40, 2)
