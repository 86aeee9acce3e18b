"""Prediction/estimation error, DIC and predictor ranking."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from ._format import fmt, to_json
from .exceptions import NumericalError, ShapeError, UnsupportedFamilyError
from .model import Dataset, Family, deviance


def mspe(B_hat, test: Dataset):
    """Mean over all test rows and responses of ``(X_t B_hat - Y_t)**2``."""
    B_hat = np.asarray(B_hat, dtype=np.float64)
    if test.n == 0:
        raise ValueError("empty test set")
    if B_hat.shape != (test.p, test.K):
        raise ShapeError(f"B_hat is {B_hat.shape}, test data needs {(test.p, test.K)}")
    R = test.X @ B_hat - test.Y
    return float(np.mean(R * R))


def sse_partitioned(B_hat, B_true):
    """Total squared estimation error and its split over true nonzero/zero entries."""
    B_hat = np.asarray(B_hat, dtype=np.float64)
    B_true = np.asarray(B_true, dtype=np.float64)
    if B_hat.shape != B_true.shape:
        raise ShapeError(f"shape mismatch {B_hat.shape} vs {B_true.shape}")
    E = (B_hat - B_true) ** 2
    nz = B_true != 0
    nonzero = float(E[nz].sum())
    zero = float(E[~nz].sum())
    return nonzero + zero, nonzero, zero


def dic(samples, data: Dataset):
    """``(DIC, D, p_D)`` where D is the deviance at the posterior means.

    ``p_D`` is the mean posterior deviance minus D; it can come out
    negative for non-log-concave posteriors and is returned as is.
    """
    try:
        d_hat = deviance(data, samples.B_hat, samples.Psi_hat)
    except NumericalError as exc:
        raise NumericalError("posterior mean of Psi is not positive definite") from exc
    p_d = samples.mean_deviance - d_hat
    return d_hat + 2.0 * p_d, d_hat, p_d


class Ranking(NamedTuple):
    predictor: int
    name: str
    value: float
    selected: bool


def rank_predictors(samples, spec=None, names=None) -> List[Ranking]:
    """Sort predictors by the posterior mean of their shared local parameter.

    Selected: ``lambda_hat > 1`` for MONG/MOHS, ``phi_hat > 1/p`` for MODL.
    """
    family = Family.parse(samples.family if spec is None else getattr(spec, "family", spec))
    if not family.shared:
        raise UnsupportedFamilyError(f"ranking needs a shared-local family, got {family.value}")
    if family.prior == "DL":
        local = np.asarray(samples.means["phi"])
        threshold = 1.0 / local.size
    else:
        local = np.asarray(samples.means["lam"])
        threshold = 1.0
    order = np.argsort(-local, kind="stable")
    if names is None:
        names = [f"x{j + 1}" for j in range(local.size)]
    return [Ranking(int(j), str(names[j]), float(local[j]), bool(local[j] > threshold)) for j in order]


@dataclass
class MetricsReport:
    mspe: Optional[float] = None
    sse_all: Optional[float] = None
    sse_nonzero: Optional[float] = None
    sse_zero: Optional[float] = None
    dic: Optional[float] = None
    d_at_mean: Optional[float] = None
    p_d: Optional[float] = None
    mean_deviance: Optional[float] = None
    rankings: list = field(default_factory=list)

    def to_dict(self):
        out = {k: v for k, v in asdict(self).items() if v is not None and k != "rankings"}
        if self.rankings:
            out["rankings"] = [r._asdict() for r in self.rankings]
        return out

    def to_json(self, **extra):
        return to_json({**extra, **self.to_dict()})

    def to_text(self):
        """``key = value`` lines, 17 significant digits."""
        lines = [f"{k} = {fmt(v)}" for k, v in self.to_dict().items() if k != "rankings"]
        for i, r in enumerate(self.rankings, 1):
            lines.append(f"rank.{i} = {r.name} {fmt(r.value)} {'selected' if r.selected else '-'}")
        return "\n".join(lines) + "\n"


def metrics_for_fit(samples, train: Dataset, B_raw=None, test: Optional[Dataset] = None,
                    B_true=None, spec=None) -> MetricsReport:
    """Assemble a report; each piece is filled only when its inputs are given."""
    rep = MetricsReport(mean_deviance=samples.mean_deviance)
    rep.dic, rep.d_at_mean, rep.p_d = dic(samples, train)
    B_eval = samples.B_hat if B_raw is None else B_raw
    if test is not None:
        rep.mspe = mspe(B_eval, test)
    if B_true is not None:
        rep.sse_all, rep.sse_nonzero, rep.sse_zero = sse_partitioned(B_eval, B_true)
    fam = Family.parse(samples.family)
    if fam.shared:
        rep.rankings = rank_predictors(samples, fam, train.x_names)
    return rep


def format_table(rows, columns, label="model"):
    """Human-readable table with three decimals."""
    head = [label, *columns]
    body = [[str(r[label]), *(f"{r[c]:.3f}" if r.get(c) is not None else "-" for c in columns)] for r in rows]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    line = lambda cells: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
    return "\n".join([line(head), *(line(b) for b in body)]) + "\n"
