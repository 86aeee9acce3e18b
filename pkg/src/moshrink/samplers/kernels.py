"""Full-conditional and Metropolis updates for every model family.

Each ``update_*`` function draws a new value for one block, stores it on
the :class:`ChainState` in place and returns it.  ``vec(B)`` stacks the
columns of the p x K coefficient matrix, so coefficient ``(j, k)`` sits at
position ``k * p + j``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import lapack, solve_triangular
from scipy.special import gammaln

from ..distributions import (
    cholesky,
    dirichlet_logpdf,
    sample_gig,
    sample_inv_wishart,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_log_dirichlet,
)
from ..exceptions import NumericalError, UnsupportedFamilyError
from .state import ChainState

TINY = 1e-300
BETA_FLOOR = 1e-12
VAR_BOUNDS = (1e-250, 1e250)
SCALAR_TARGET = 0.44
SIMPLEX_TARGET = 0.24
JITTERS = (1e-12, 1e-10, 1e-8)


class Suff(NamedTuple):
    X: np.ndarray
    Y: np.ndarray
    XtX: np.ndarray
    XtY: np.ndarray

    @property
    def n(self):
        return self.X.shape[0]


def sufficient_stats(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return Suff(X, Y, X.T @ X, X.T @ Y)


# -- coefficients ------------------------------------------------------------


def prior_variance(state: ChainState, family, hyper):
    """Prior variance of each beta_jk given the current latent state (p x K)."""
    prior = family.prior
    p, K = state.B.shape
    if prior is None:
        return np.full((p, K), float(hyper.noshrink_var))
    tau2 = state.tau ** 2
    if prior == "NG":
        lam = state.lam if state.lam.ndim == 2 else state.lam[:, None]
        var = lam * tau2
    elif prior == "HS":
        lam = state.lam if state.lam.ndim == 2 else state.lam[:, None]
        var = lam ** 2 * tau2
    else:
        phi = state.phi if state.phi.ndim == 2 else state.phi[:, None]
        var = state.eta * phi ** 2 * tau2
    return np.clip(var, *VAR_BOUNDS)


def _chol_with_jitter(P):
    try:
        return cholesky(P)
    except NumericalError as first:
        scale = np.mean(np.abs(np.diag(P)))
        for eps in JITTERS:
            try:
                return cholesky(P + eps * scale * np.eye(P.shape[0]))
            except NumericalError:
                continue
        raise first


def b_conditional(Psi, XtX, XtY, prior_var):
    """Mean and precision factor of ``vec(B) | rest``.

    The precision is ``kron(Psi^-1, X'X) + diag(1/vec(Omega))`` and the mean
    solves ``precision @ M = vec(X'Y Psi^-1)`` (equal to
    ``(Psi^-1 kron X') vec(Y)``).  Returns ``(M, L)`` with ``L`` the lower
    Cholesky factor of the precision.
    """
    Lpsi = cholesky(Psi)
    Psi_inv, _ = lapack.dpotri(Lpsi, lower=1)
    Psi_inv = np.tril(Psi_inv) + np.tril(Psi_inv, -1).T
    K, p = Psi.shape[0], XtX.shape[0]
    # kron(Psi_inv, XtX) laid out by broadcasting
    P = (Psi_inv[:, None, :, None] * XtX[None, :, None, :]).reshape(p * K, p * K)
    P.flat[:: p * K + 1] += 1.0 / prior_var.T.ravel()
    L = _chol_with_jitter(P)
    rhs = (XtY @ Psi_inv).T.ravel()
    M, _ = lapack.dpotrs(L, rhs, lower=1)
    return M, L


def b_posterior_moments(Psi, XtX, XtY, prior_var):
    """``(M, W)`` with ``W`` the conditional covariance, via the Cholesky route."""
    M, L = b_conditional(Psi, XtX, XtY, prior_var)
    Linv = solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return M, Linv.T @ Linv


def update_B(state: ChainState, suff: Suff, spec, rng):
    p, K = state.B.shape
    var = prior_variance(state, spec.family, spec.hyper)
    M, L = b_conditional(state.Psi, suff.XtX, suff.XtY, var)
    z = rng.standard_normal(p * K)
    draw = M + solve_triangular(L, z, lower=True, trans="T")
    state.B = draw.reshape(K, p).T.copy()
    return state.B


# -- residual covariance ----------------------------------------------------


def residual_ss(B, suff: Suff):
    R = suff.Y - suff.X @ B
    return R.T @ R


def update_psi(state: ChainState, suff: Suff, spec, rng, S=None):
    """``Psi ~ InvWishart(nu0 + n, S0 + S)``."""
    if S is None:
        S = residual_ss(state.B, suff)
    h = spec.hyper
    state.Psi = sample_inv_wishart(h.nu0 + suff.n, h.S0 + S, rng)
    return state.Psi


# -- normal-gamma ------------------------------------------------------------


def update_lambda_ng(state: ChainState, spec, rng):
    """giG(c - m/2, 2c, sum beta^2/tau^2) for each local scale.

    ``m`` is the number of coefficients sharing the local scale: K for
    the shared model, 1 for the naive one.
    """
    ratio = state.B ** 2 / state.tau ** 2
    if state.lam.ndim == 1:
        chi, m = ratio.sum(axis=1), state.B.shape[1]
    else:
        chi, m = ratio, 1
    chi = np.maximum(chi, TINY)
    c = state.c
    state.lam = np.maximum(sample_gig(c - 0.5 * m, 2.0 * c, chi, rng), TINY)
    return state.lam


def update_lambda_mong(state, spec, rng):
    return update_lambda_ng(state, spec, rng)


def _log_target_tau_ng(u, stat, p, gamma):
    # density in u = log(tau): tau^-p exp(-stat/tau^2) / (tau^2 + gamma^2) * tau
    return -(p - 1.0) * u - stat * np.exp(-2.0 * u) - np.logaddexp(2.0 * u, 2.0 * np.log(gamma))


def update_tau_ng(state: ChainState, spec, rng):
    """One adaptive log-scale random-walk step per tau_k."""
    p, K = state.B.shape
    lam = state.lam if state.lam.ndim == 2 else state.lam[:, None]
    stat = (state.B ** 2 / (2.0 * lam)).sum(axis=0)
    gamma = spec.hyper.gamma_hc
    mh = state.mh
    u = np.log(state.tau)
    step = np.exp(mh.log_step["tau"])
    prop = u + step * rng.standard_normal(K)
    log_r = _log_target_tau_ng(prop, stat, p, gamma) - _log_target_tau_ng(u, stat, p, gamma)
    alpha = np.exp(np.minimum(log_r, 0.0))
    accept = rng.random(K) < alpha
    state.tau = np.exp(np.where(accept, prop, u))
    mh.log_step["tau"] = mh.log_step["tau"] + mh.gain() * (alpha - SCALAR_TARGET)
    mh.tally("tau", alpha)
    return state.tau


def log_target_c(c, lam, rate):
    """Log conditional density of c (up to a constant) given local scales."""
    lam = np.ravel(lam)
    m = lam.size
    c = np.asarray(c, dtype=np.float64)
    return m * (c * np.log(c) - gammaln(c)) - c * (rate + lam.sum()) + (c - 1.0) * np.log(lam).sum()


def update_c_ng(state: ChainState, spec, rng):
    mh = state.mh
    rate = spec.hyper.lambda_c
    u = np.log(state.c)
    prop = u + np.exp(mh.log_step["c"]) * rng.standard_normal()
    with np.errstate(over="ignore", invalid="ignore"):
        log_r = (log_target_c(np.exp(prop), state.lam, rate) + prop) - (
            log_target_c(state.c, state.lam, rate) + u
        )
    alpha = float(np.exp(min(log_r, 0.0))) if np.isfinite(log_r) else 0.0
    if rng.random() < alpha:
        state.c = float(np.exp(prop))
    mh.log_step["c"] = mh.log_step["c"] + mh.gain() * (alpha - SCALAR_TARGET)
    mh.tally("c", alpha)
    return state.c


# -- horseshoe ---------------------------------------------------------------


def update_hs_blocks(state: ChainState, spec, rng):
    """Conjugate inverse-gamma sweep: lambda^2, tau^2, nu, omega."""
    p, K = state.B.shape
    B2 = state.B ** 2
    shared = state.lam.ndim == 1
    tau2 = state.tau ** 2
    if shared:
        lam2 = sample_inverse_gamma(0.5 * (K + 1), 1.0 / state.nu + (B2 / (2.0 * tau2)).sum(axis=1), rng)
    else:
        lam2 = sample_inverse_gamma(1.0, 1.0 / state.nu + B2 / (2.0 * tau2), rng)
    lam2 = np.maximum(lam2, TINY)
    lam2_m = lam2[:, None] if shared else lam2
    tau2 = sample_inverse_gamma(0.5 * (p + 1), 1.0 / state.omega + (B2 / (2.0 * lam2_m)).sum(axis=0), rng)
    tau2 = np.maximum(tau2, TINY)
    state.nu = sample_inverse_gamma(1.0, 1.0 + 1.0 / lam2, rng)
    state.omega = sample_inverse_gamma(1.0, 1.0 + 1.0 / tau2, rng)
    state.lam = np.sqrt(lam2)
    state.tau = np.sqrt(tau2)
    return lam2, tau2, state.nu, state.omega


def update_mohs_blocks(state, spec, rng):
    return update_hs_blocks(state, spec, rng)


# -- Dirichlet-Laplace -------------------------------------------------------


def update_tau_dl(state: ChainState, spec, rng):
    """tau_k ~ giG(pa - p, 1, 2 sum_j |beta_jk| / phi_jk), eta integrated out."""
    p, K = state.B.shape
    a = spec.hyper.dl_a
    phi = state.phi if state.phi.ndim == 2 else state.phi[:, None]
    chi = np.maximum(2.0 * (np.abs(state.B) / phi).sum(axis=0), TINY)
    state.tau = np.maximum(sample_gig(p * a - p, 1.0, chi, rng), TINY)
    return state.tau


def update_tau_modl(state, spec, rng):
    return update_tau_dl(state, spec, rng)


def log_target_phi(log_phi, weight, a, m):
    """Log density of each simplex group, eta integrated out.

    ``log_phi`` and ``weight`` are (groups, p); ``weight`` holds
    ``sum_k |beta_jk| / tau_k`` over the ``m`` responses in the group.
    """
    return ((a - m - 1.0) * log_phi - weight * np.exp(-log_phi)).sum(axis=-1)


def update_phi_dl(state: ChainState, spec, rng):
    """Joint Dirichlet-proposal Metropolis step on each simplex group."""
    p, K = state.B.shape
    a = spec.hyper.dl_a
    mh = state.mh
    W = np.abs(state.B) / state.tau
    if state.phi.ndim == 1:
        weight, m, phi = W.sum(axis=1)[None, :], K, state.phi[None, :]
    else:
        weight, m, phi = W.T, 1, state.phi.T
    zeta = mh.zeta[:, None]
    log_phi = np.log(phi)
    log_prop = sample_log_dirichlet(zeta * phi, rng)
    prop = np.exp(log_prop)
    valid = np.all(prop > 0, axis=-1)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        log_r = (
            log_target_phi(log_prop, weight, a, m)
            - log_target_phi(log_phi, weight, a, m)
            + dirichlet_logpdf(log_phi, zeta * prop)
            - dirichlet_logpdf(log_prop, zeta * phi)
        )
    log_r = np.where(valid & np.isfinite(log_r), log_r, -np.inf)
    alpha = np.exp(np.minimum(log_r, 0.0))
    accept = rng.random(alpha.shape) < alpha
    if accept.any():
        new = np.where(accept[:, None], prop / prop.sum(axis=-1, keepdims=True), phi)
        state.phi = new[0] if state.phi.ndim == 1 else new.T.copy()
    mh.zeta = np.exp(np.log(mh.zeta) - mh.gain() * (alpha - SIMPLEX_TARGET))
    mh.tally("phi", alpha)
    return state.phi


def update_phi_modl(state, spec, rng):
    return update_phi_dl(state, spec, rng)


def update_eta_dl(state: ChainState, spec, rng):
    """1/eta_jk ~ InverseGaussian(mean phi_j tau_k / |beta_jk|, shape 1)."""
    phi = state.phi if state.phi.ndim == 2 else state.phi[:, None]
    mu = phi * state.tau / np.maximum(np.abs(state.B), BETA_FLOOR)
    inv = sample_inverse_gaussian(np.maximum(mu, TINY), 1.0, rng)
    state.eta = 1.0 / np.maximum(inv, TINY)
    return state.eta


def update_eta_modl(state, spec, rng):
    return update_eta_dl(state, spec, rng)


# -- naive families ---------------------------------------------------------


def update_naive_locals(state: ChainState, spec, rng):
    """Per-(j, k) local update for the naive families."""
    prior = spec.family.prior
    if spec.family.shared or prior is None:
        raise UnsupportedFamilyError(f"{spec.family.value} has no per-response locals")
    if prior == "NG":
        return update_lambda_ng(state, spec, rng)
    if prior == "HS":
        return update_hs_blocks(state, spec, rng)[0]
    return update_phi_dl(state, spec, rng)


# -- schedules ---------------------------------------------------------------

# (block, kernel, needs data); executed in order once per iteration
SCHEDULES = {
    "NG": (("lam", update_lambda_ng, False), ("tau", update_tau_ng, False), ("c", update_c_ng, False)),
    "HS": (("lam", update_hs_blocks, False),),
    "DL": (("tau", update_tau_dl, False), ("phi", update_phi_dl, False), ("eta", update_eta_dl, False)),
    None: (),
}
