from types import SimpleNamespace

import numpy as np
import pytest

from moshrink.diagnostics import (
    MetricsReport, dic, format_table, metrics_for_fit, mspe, rank_predictors, sse_partitioned,
)
from moshrink.exceptions import ShapeError, UnsupportedFamilyError
from moshrink.model import Dataset, ModelSpec, deviance, standardize
from moshrink.samplers import run_chain
from moshrink.simulation import make_toy


def test_mspe_hand_computed():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    Y = np.array([[1.0], [2.0], [2.0]])
    B = np.array([[1.0], [1.0]])
    # residuals 0, -1, 0
    assert mspe(B, Dataset(Y, X)) == pytest.approx(1.0 / 3.0)
    with pytest.raises(ShapeError):
        mspe(np.ones((3, 1)), Dataset(Y, X))


def test_sse_partition_sums():
    B_true = np.array([[2.0, 0.0], [0.0, -1.0]])
    B_hat = np.array([[1.5, 0.1], [0.2, -1.0]])
    total, nz, z = sse_partitioned(B_hat, B_true)
    assert nz == pytest.approx(0.25)
    assert z == pytest.approx(0.05)
    assert total == pytest.approx(nz + z)
    assert sse_partitioned(B_true, B_true) == (0.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def fit():
    data = standardize(make_toy())
    return data, run_chain(data, ModelSpec("MONG"), 1500, 500, seed=4)


def test_dic_identity_and_definition(fit):
    data, s = fit
    value, D, p_d = dic(s, data)
    assert D == pytest.approx(deviance(data, s.B_hat, s.Psi_hat))
    assert value == D + 2 * p_d
    assert p_d == pytest.approx(s.mean_deviance - D)
    # effective parameters: between 0 and the count of B and Psi entries
    assert 0 < p_d < 3 * 2 + 3


def test_ranking_orders_and_thresholds(fit):
    data, s = fit
    r = rank_predictors(s)
    assert [x.predictor for x in r][0] == 0
    assert all(a.value >= b.value for a, b in zip(r, r[1:]))
    assert r[0].selected == (r[0].value > 1)
    # monotone rescaling of the local means keeps the order
    scaled = SimpleNamespace(family="MONG", means={"lam": np.log1p(s.means["lam"]) * 7})
    assert [x.predictor for x in rank_predictors(scaled)] == [x.predictor for x in r]


def test_ranking_dl_threshold_and_naive_rejection():
    fake = SimpleNamespace(family="MODL", means={"phi": np.array([0.1, 0.6, 0.3])})
    r = rank_predictors(fake, names=["a", "b", "c"])
    assert [x.name for x in r] == ["b", "c", "a"]
    assert [x.selected for x in r] == [True, False, False]
    with pytest.raises(UnsupportedFamilyError):
        rank_predictors(SimpleNamespace(family="NaiveNG", means={}))
    with pytest.raises(UnsupportedFamilyError):
        rank_predictors(SimpleNamespace(family="NoShrinkage", means={}))


def test_report_and_table(fit):
    data, s = fit
    rep = metrics_for_fit(s, data, test=data, B_true=np.zeros((3, 2)))
    d = rep.to_dict()
    assert {"mspe", "dic", "sse_zero", "rankings"} <= set(d)
    assert "rank.1 = x1" in rep.to_text()
    assert '"tool": "moshrink"' in rep.to_json(tool="moshrink")
    table = format_table([{"model": "A", "mspe": 1.23456}, {"model": "BB", "mspe": None}], ["mspe"])
    assert "1.235" in table and "-" in table.splitlines()[2]
    assert MetricsReport().to_dict() == {}
