"""Random variate generators and log-densities used by the samplers.

All generators take an explicit :class:`numpy.random.Generator` and
broadcast over array-valued parameters.  Streams are built on the
counter-based Philox bit generator so that independent sub-streams can be
derived per chain and per parameter block (see :func:`rng_stream`).
"""
from __future__ import annotations

import math
import zlib
from typing import NamedTuple

import numpy as np
from scipy import special
from scipy.linalg import lapack, solve_triangular

from .exceptions import NumericalError, ParameterDomainError

__all__ = [
    "GigParams",
    "rng_stream",
    "cholesky",
    "sample_gig",
    "sample_inverse_gaussian",
    "sample_inverse_gamma",
    "sample_gamma",
    "sample_exponential",
    "sample_half_cauchy",
    "sample_dirichlet",
    "sample_log_dirichlet",
    "sample_mvn",
    "sample_inv_wishart",
    "gig_logpdf",
    "inverse_gaussian_logpdf",
    "inverse_gamma_logpdf",
    "half_cauchy_logpdf",
    "dirichlet_logpdf",
]


def _stream_key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def rng_stream(seed, *stream):
    """Return a Philox generator for ``seed`` and sub-stream identifiers.

    ``stream`` entries may be non-negative integers or strings (hashed with
    CRC32).  Different identifiers give statistically independent streams;
    equal ``(seed, stream)`` always give the same sequence.
    """
    key = tuple(_stream_key(s) for s in stream)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def cholesky(a):
    """Lower Cholesky factor of ``a``; raises NumericalError with the pivot."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterDomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix has non-finite entries")
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NumericalError(
            f"matrix is not positive definite (pivot {info - 1})", pivot=info - 1
        )
    if info < 0:
        raise NumericalError(f"dpotrf argument {-info} invalid")
    return c


# -- generalized inverse Gaussian ------------------------------------------


class GigParams(NamedTuple):
    """Parameters of the kernel ``x**(rho-1) * exp(-(kappa*x + chi/x)/2)``."""

    rho: float
    kappa: float
    chi: float

    def is_valid(self):
        return bool(np.all(_gig_valid(self.rho, self.kappa, self.chi)))


def _gig_valid(rho, kappa, chi):
    rho, kappa, chi = np.broadcast_arrays(rho, kappa, chi)
    ok = (chi > 0) & (kappa >= 0) & (rho < 0)
    ok |= (chi > 0) & (kappa > 0)
    ok |= (chi >= 0) & (kappa > 0) & (rho > 0)
    return ok & np.isfinite(rho) & np.isfinite(kappa) & np.isfinite(chi)


def _psi(x, alpha, lam):
    return -alpha * (np.cosh(x) - 1.0) - lam * (np.expm1(x) - x)


def _dpsi(x, alpha, lam):
    return -alpha * np.sinh(x) - lam * np.expm1(x)


def _gig_log_core(lam, omega, rng):
    """Devroye (2014) rejection sampler on the log scale.

    Returns ``log Z`` for ``Z`` with density proportional to
    ``z**(lam-1) * exp(-omega*(z + 1/z)/2)`` rescaled by the mode-centering
    factor ``(lam + sqrt(lam**2 + omega**2)) / omega``.  ``lam >= 0``,
    ``omega > 0``; arrays are 1-d and aligned.
    """
    root = np.sqrt(omega * omega + lam * lam)
    alpha = omega * omega / (root + lam)

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        x = -_psi(1.0, alpha, lam)
        t = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(2.0 / (alpha + lam)), np.log(4.0 / (alpha + 2.0 * lam))),
        )
        x = -_psi(-1.0, alpha, lam)
        s_log = -np.log(alpha) + np.log1p(alpha + np.sqrt(1.0 + 2.0 * alpha))
        s_small = np.where(lam > 0, np.minimum(1.0 / lam, s_log), s_log)
        s = np.where(
            (x >= 0.5) & (x <= 2.0),
            1.0,
            np.where(x > 2.0, np.sqrt(4.0 / (alpha * math.cosh(1.0) + lam)), s_small),
        )

    eta = -_psi(t, alpha, lam)
    zeta = -_dpsi(t, alpha, lam)
    theta = -_psi(-s, alpha, lam)
    xi = _dpsi(-s, alpha, lam)
    p = 1.0 / xi
    r = 1.0 / zeta
    td = t - r * eta
    sd = s - p * theta
    q = td + sd
    tot = p + q + r

    out = np.empty_like(lam)
    pending = np.arange(lam.size)
    while pending.size:
        u = rng.random(pending.size)
        v = rng.random(pending.size)
        w = rng.random(pending.size)
        i = pending
        lv = np.log(v)
        mid = u < q[i] / tot[i]
        right = ~mid & (u < (q[i] + r[i]) / tot[i])
        rnd = np.where(mid, -sd[i] + q[i] * v, np.where(right, td[i] - r[i] * lv, -sd[i] + p[i] * lv))
        log_g = np.where(
            rnd > td[i],
            -eta[i] - zeta[i] * (rnd - t[i]),
            np.where(rnd < -sd[i], -theta[i] + xi[i] * (rnd + s[i]), 0.0),
        )
        with np.errstate(divide="ignore", over="ignore"):
            accept = np.log(w) + log_g <= _psi(rnd, alpha[i], lam[i])
        out[i[accept]] = rnd[accept]
        pending = i[~accept]
    return out, root


def sample_gig(rho, kappa, chi, rng, size=None):
    """Draw from the generalized inverse Gaussian distribution.

    The density is proportional to ``x**(rho-1) * exp(-(kappa*x + chi/x)/2)``.
    ``chi == 0`` dispatches to a gamma draw and ``kappa == 0`` to an
    inverse-gamma draw; everything else uses Devroye's rejection sampler,
    which is valid for any ``rho`` and any ``sqrt(kappa*chi) > 0``.
    """
    rho, kappa, chi = (np.asarray(a, dtype=np.float64) for a in (rho, kappa, chi))
    shape = np.broadcast_shapes(rho.shape, kappa.shape, chi.shape) if size is None else size
    rho, kappa, chi = (np.broadcast_to(a, shape).ravel() for a in (rho, kappa, chi))
    if not np.all(_gig_valid(rho, kappa, chi)):
        raise ParameterDomainError("invalid giG parameter combination")

    out = np.empty(rho.size)
    gam = chi == 0
    inv = (kappa == 0) & ~gam
    gen = ~(gam | inv)
    if gam.any():
        out[gam] = rng.standard_gamma(rho[gam]) * (2.0 / kappa[gam])
    if inv.any():
        out[inv] = (chi[inv] / 2.0) / rng.standard_gamma(-rho[inv])
    if gen.any():
        r, k, c = rho[gen], kappa[gen], chi[gen]
        lam = np.abs(r)
        omega = np.sqrt(k * c)
        logz, root = _gig_log_core(lam, omega, rng)
        # x = sqrt(chi/kappa) * Z**sign(rho), written to avoid 1/omega
        with np.errstate(over="ignore"):
            out[gen] = np.where(
                r >= 0,
                np.exp(logz) * (lam + root) / k,
                c * np.exp(-logz) / (lam + root),
            )
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def gig_logpdf(x, rho, kappa, chi):
    """Normalized log-density (requires kappa > 0 and chi > 0)."""
    x = np.asarray(x, dtype=np.float64)
    omega = np.sqrt(kappa * chi)
    log_norm = 0.5 * rho * np.log(kappa / chi) - np.log(2.0) - (
        np.log(special.kve(rho, omega)) - omega
    )
    return log_norm + (rho - 1.0) * np.log(x) - 0.5 * (kappa * x + chi / x)


# -- inverse Gaussian --------------------------------------------------------


def sample_inverse_gaussian(mu, theta, rng, size=None):
    """Inverse Gaussian with mean ``mu`` and shape ``theta``.

    Uses the Michael–Schucany–Haas transformation with a single acceptance
    step; the root is written in a cancellation-free form so very large
    ``mu`` (nearly Levy-distributed draws) stays accurate.
    """
    mu, theta = np.asarray(mu, dtype=np.float64), np.asarray(theta, dtype=np.float64)
    if np.any(~(mu > 0)) or np.any(~(theta > 0)):
        raise ParameterDomainError("inverse Gaussian needs mu > 0 and theta > 0")
    shape = np.broadcast_shapes(mu.shape, theta.shape) if size is None else size
    mu = np.broadcast_to(mu, shape)
    theta = np.broadcast_to(theta, shape)
    y = rng.standard_normal(shape) ** 2
    r = mu * y / (2.0 * theta)
    x = mu / (1.0 + r + np.sqrt(r * (r + 2.0)))
    u = rng.random(shape)
    out = np.where(u * (mu + x) <= mu, x, mu * mu / x)
    return out if out.ndim else float(out)


def inverse_gaussian_logpdf(x, mu, theta):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * (np.log(theta) - np.log(2 * np.pi) - 3 * np.log(x)) - theta * (x - mu) ** 2 / (
        2 * mu * mu * x
    )


# -- gamma family ------------------------------------------------------------


def _positive(name, *vals):
    for v in vals:
        if np.any(~(np.asarray(v) > 0)):
            raise ParameterDomainError(f"{name} parameters must be positive")


def sample_gamma(shape, scale, rng, size=None):
    _positive("gamma", shape, scale)
    if size is None:
        size = np.broadcast_shapes(np.shape(shape), np.shape(scale))
    return rng.standard_gamma(shape, size=size) * scale


def sample_exponential(rate, rng, size=None):
    _positive("exponential", rate)
    if size is None:
        size = np.shape(rate)
    return rng.standard_exponential(size) / rate


def sample_inverse_gamma(shape, scale, rng, size=None):
    """Density ``scale**shape / Gamma(shape) * x**(-shape-1) * exp(-scale/x)``."""
    _positive("inverse gamma", shape, scale)
    if size is None:
        size = np.broadcast_shapes(np.shape(shape), np.shape(scale))
    return scale / rng.standard_gamma(shape, size=size)


def inverse_gamma_logpdf(x, shape, scale):
    x = np.asarray(x, dtype=np.float64)
    return shape * np.log(scale) - special.gammaln(shape) - (shape + 1) * np.log(x) - scale / x


def sample_half_cauchy(scale, rng, size=None):
    _positive("half-Cauchy", scale)
    if size is None:
        size = np.shape(scale)
    return scale * np.abs(rng.standard_cauchy(size))


def half_cauchy_logpdf(x, scale):
    x = np.asarray(x, dtype=np.float64)
    return np.log(2 * scale / np.pi) - np.log(scale * scale + x * x)


# -- Dirichlet ---------------------------------------------------------------


def sample_log_dirichlet(alpha, rng):
    """Log of a Dirichlet draw along the last axis.

    Gamma variates with shape below one are drawn as
    ``Gamma(a + 1) * U**(1/a)`` on the log scale so tiny components keep
    their relative precision instead of underflowing.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0 or np.any(~(alpha > 0)):
        raise ParameterDomainError("Dirichlet concentrations must be positive")
    small = alpha < 1.0
    lg = np.log(rng.standard_gamma(np.where(small, alpha + 1.0, alpha)))
    lu = np.log(rng.random(alpha.shape))
    lg = np.where(small, lg + lu / alpha, lg)
    return lg - special.logsumexp(lg, axis=-1, keepdims=True)


def sample_dirichlet(alpha, rng):
    """Dirichlet draw along the last axis (normalized gamma variates)."""
    return np.exp(sample_log_dirichlet(alpha, rng))


def dirichlet_logpdf(log_x, alpha):
    """Dirichlet log-density along the last axis, given ``log(x)``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return (
        special.gammaln(alpha.sum(axis=-1))
        - special.gammaln(alpha).sum(axis=-1)
        + ((alpha - 1.0) * log_x).sum(axis=-1)
    )


# -- multivariate ------------------------------------------------------------


def sample_mvn(mean, covariance, rng):
    """``mean + L z`` with ``L`` the lower Cholesky factor of ``covariance``."""
    mean = np.asarray(mean, dtype=np.float64)
    L = cholesky(covariance)
    if L.shape[0] != mean.shape[-1]:
        raise ParameterDomainError("mean and covariance sizes differ")
    return mean + L @ rng.standard_normal(L.shape[0])


def sample_inv_wishart(df, scale, rng):
    """Inverse-Wishart(df, scale) draw, mean ``scale / (df - K - 1)``.

    With ``scale = C C'`` and Bartlett factor ``A`` of a standard Wishart,
    the draw is ``C (A A')^{-1} C'``, i.e. the inverse of a
    Wishart(df, scale^{-1}) draw without forming that inverse explicitly.
    """
    scale = np.asarray(scale, dtype=np.float64)
    K = scale.shape[0]
    if not df > K - 1:
        raise ParameterDomainError(f"inverse-Wishart needs df > K - 1 (df={df}, K={K})")
    try:
        C = cholesky(scale)
    except NumericalError as exc:
        raise ParameterDomainError("inverse-Wishart scale is not SPD") from exc
    A = np.zeros((K, K))
    A[np.diag_indices(K)] = np.sqrt(rng.chisquare(df - np.arange(K)))
    il = np.tril_indices(K, -1)
    A[il] = rng.standard_normal(len(il[0]))
    T = solve_triangular(A, C.T, lower=True)
    out = T.T @ T
    return 0.5 * (out + out.T)
