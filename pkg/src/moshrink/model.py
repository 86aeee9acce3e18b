"""Datasets, model specifications and the matrix-normal likelihood."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve

from .distributions import cholesky
from .exceptions import DegenerateColumnError, NumericalError, ParameterDomainError, ShapeError

LOG_2PI = math.log(2.0 * math.pi)


class Family(str, Enum):
    MONG = "MONG"
    MOHS = "MOHS"
    MODL = "MODL"
    NAIVE_NG = "NaiveNG"
    NAIVE_HS = "NaiveHS"
    NAIVE_DL = "NaiveDL"
    NO_SHRINKAGE = "NoShrinkage"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for fam in cls:
            if fam.value.lower() == key:
                return fam
        raise ValueError(f"unknown model family {value!r}")

    @property
    def prior(self):
        """Base prior: 'NG', 'HS', 'DL' or None for the conjugate baseline."""
        return {
            "MONG": "NG", "NaiveNG": "NG",
            "MOHS": "HS", "NaiveHS": "HS",
            "MODL": "DL", "NaiveDL": "DL",
        }.get(self.value)

    @property
    def shared(self):
        return self in (Family.MONG, Family.MOHS, Family.MODL)


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters.

    ``dl_a`` may be the string ``"1/p"``; ``nu0`` and ``S0`` default to
    ``K + 2`` and the identity.  Call :meth:`resolve` to fill them in.
    """

    gamma_hc: float = 0.5
    lambda_c: float = 0.5
    dl_a: float | str = 0.5
    nu0: Optional[float] = None
    S0: Optional[np.ndarray] = None
    noshrink_var: float = 10.0

    def resolve(self, p, K):
        a = 1.0 / p if self.dl_a in ("1/p", "inv_p") else float(self.dl_a)
        nu0 = K + 2.0 if self.nu0 is None else float(self.nu0)
        S0 = np.eye(K) if self.S0 is None else np.asarray(self.S0, dtype=np.float64)
        for name, v in (("gamma_hc", self.gamma_hc), ("lambda_c", self.lambda_c),
                        ("dl_a", a), ("noshrink_var", self.noshrink_var)):
            if not v > 0:
                raise ParameterDomainError(f"{name} must be positive, got {v}")
        if S0.shape != (K, K):
            raise ShapeError(f"S0 must be {K}x{K}, got {S0.shape}")
        if not nu0 > K - 1:
            raise ParameterDomainError(f"nu0 must exceed K - 1 = {K - 1}")
        try:
            cholesky(S0)
        except NumericalError as exc:
            raise ParameterDomainError("S0 is not positive definite") from exc
        return replace(self, dl_a=a, nu0=nu0, S0=S0)


@dataclass(frozen=True)
class ModelSpec:
    family: Family = Family.MONG
    hyper: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Responses ``Y`` (n x K) and predictors ``X`` (n x p).

    When ``standardized`` is true the column means/sds of the raw data are
    kept so predictions can be mapped back to the original response scale.
    """

    Y: np.ndarray
    X: np.ndarray
    standardized: bool = False
    x_mean: Optional[np.ndarray] = None
    x_sd: Optional[np.ndarray] = None
    y_mean: Optional[np.ndarray] = None
    y_sd: Optional[np.ndarray] = None
    x_names: Optional[Sequence[str]] = None
    y_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        Y = np.array(self.Y, dtype=np.float64, ndmin=2)
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        if Y.ndim != 2 or X.ndim != 2:
            raise ShapeError("X and Y must be 2-d")
        if Y.shape[0] != X.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if Y.shape[0] < 1 or Y.shape[1] < 1 or X.shape[1] < 1:
            raise ShapeError("need n >= 1, p >= 1 and K >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("missing or non-finite entries in X or Y")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def K(self):
        return self.Y.shape[1]


def _column_stats(A, label, names):
    mean = A.mean(axis=0)
    sd = A.std(axis=0, ddof=1) if A.shape[0] > 1 else np.zeros(A.shape[1])
    bad = np.flatnonzero(~(sd > 0))
    if bad.size:
        j = int(bad[0])
        name = names[j] if names is not None else f"{label}[{j}]"
        raise DegenerateColumnError(f"column {name} has zero standard deviation", column=name)
    return mean, sd


def standardize(raw: Dataset) -> Dataset:
    """Center and scale every column of X and Y to mean 0, sd 1 (ddof=1).

    Standardizing an already-standardized dataset keeps the original
    metadata, so the stored transform always maps back to raw units.
    """
    xm, xs = _column_stats(raw.X, "X", raw.x_names)
    ym, ys = _column_stats(raw.Y, "Y", raw.y_names)
    X = (raw.X - xm) / xs
    Y = (raw.Y - ym) / ys
    if raw.standardized:
        xm, xs = raw.x_mean + raw.x_sd * xm, raw.x_sd * xs
        ym, ys = raw.y_mean + raw.y_sd * ym, raw.y_sd * ys
    return Dataset(Y, X, True, xm, xs, ym, ys, raw.x_names, raw.y_names)


def transform_X(data: Dataset, X_new):
    """Apply the stored predictor standardization to new rows."""
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or X_new.shape[1] != data.p:
        raise ShapeError(f"expected {data.p} predictor columns, got shape {X_new.shape}")
    if not data.standardized:
        return X_new
    return (X_new - data.x_mean) / data.x_sd


def predict(B, X_new, data: Optional[Dataset] = None, raw_scale=True):
    """``X_new @ B``.

    If ``data`` is a standardized dataset and ``raw_scale`` is true,
    ``X_new`` is taken in raw units, standardized with the stored
    metadata, and predictions are mapped back to raw response units.
    """
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    X_new = np.atleast_2d(np.asarray(X_new, dtype=np.float64))
    if X_new.shape[1] != B.shape[0]:
        raise ShapeError(f"X_new has {X_new.shape[1]} columns, B has {B.shape[0]} rows")
    if data is None or not data.standardized or not raw_scale:
        return X_new @ B
    return transform_X(data, X_new) @ B * data.y_sd + data.y_mean


def destandardize_coef(B, data: Dataset):
    """Coefficients on the raw scale: ``B_jk * y_sd_k / x_sd_j``.

    The intercept implied by the stored means is not included.
    """
    B = np.asarray(B, dtype=np.float64)
    if not data.standardized:
        return B.copy()
    return B * data.y_sd[None, :] / data.x_sd[:, None]


def loglik_from_ss(S, n, Psi):
    """Log-likelihood given the residual cross-product ``S = R'R``."""
    L = cholesky(Psi)
    K = L.shape[0]
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    quad = np.trace(cho_solve((L, True), S))
    return -0.5 * (n * K * LOG_2PI + n * logdet + quad)


def log_likelihood(data: Dataset, B, Psi):
    """Sum over rows of ``log N_K(Y_i; X_i B, Psi)``."""
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (data.p, data.K):
        raise ShapeError(f"B must be {data.p}x{data.K}, got {B.shape}")
    Psi = np.asarray(Psi, dtype=np.float64)
    if Psi.shape != (data.K, data.K):
        raise ShapeError(f"Psi must be {data.K}x{data.K}, got {Psi.shape}")
    R = data.Y - data.X @ B
    return loglik_from_ss(R.T @ R, data.n, Psi)


def deviance(data: Dataset, B, Psi):
    return -2.0 * log_likelihood(data, B, Psi)


# -- CSV ingestion -----------------------------------------------------------


class CsvParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_matrix_csv(path, header="auto"):
    """Read a numeric CSV into ``(matrix, column_names)``.

    Lines starting with ``#`` are skipped.
    ``header`` is True, False or ``"auto"`` (header present iff the first
    row has a non-numeric cell).  Parsing uses ``float()`` so the decimal
    separator is always a dot, independent of locale.  Empty cells are
    rejected with the offending line number.
    """
    rows, names, first = [], None, True
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec) or rec[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in rec]
            if first:
                first = False
                if header is True or (header == "auto" and not all(map(_is_number, cells))):
                    names = cells
                    continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise CsvParseError(f"{path}: line {lineno}: non-numeric or missing value", lineno) from None
            if rows and len(vals) != len(rows[0]):
                raise CsvParseError(
                    f"{path}: line {lineno}: expected {len(rows[0])} fields, got {len(vals)}", lineno
                )
            rows.append(vals)
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    A = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise CsvParseError(f"{path}: non-finite values")
    if names is not None and len(names) != A.shape[1]:
        raise CsvParseError(f"{path}: header has {len(names)} names for {A.shape[1]} columns", 1)
    return A, names


def load_dataset(x_path, y_path=None, n_responses=None, header="auto"):
    """Load a dataset from separate X/Y files or one combined file.

    With a single file, the first ``n_responses`` columns are the
    responses and the remaining columns the predictors.
    """
    if y_path is not None:
        X, xn = read_matrix_csv(x_path, header)
        Y, yn = read_matrix_csv(y_path, header)
    else:
        if n_responses is None or n_responses < 1:
            raise ValueError("a combined file needs the number of response columns")
        A, names = read_matrix_csv(x_path, header)
        if A.shape[1] <= n_responses:
            raise ShapeError("combined file has no predictor columns")
        Y, X = A[:, :n_responses], A[:, n_responses:]
        yn = names[:n_responses] if names else None
        xn = names[n_responses:] if names else None
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return Dataset(Y, X, x_names=xn, y_names=yn)


def write_matrix_csv(path, A, names=None, comment=None):
    """Write a matrix with 17 significant digits."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        if names is not None:
            w.writerow(names)
        for row in A:
            w.writerow([format(v, ".17g") for v in row])
