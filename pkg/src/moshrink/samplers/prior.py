"""Forward simulation from the joint prior (used for prior-predictive checks)."""
from __future__ import annotations

import numpy as np

from ..distributions import (
    sample_dirichlet, sample_exponential, sample_gamma, sample_half_cauchy, sample_inv_wishart,
)
from ..model import ModelSpec
from .kernels import prior_variance
from .state import initial_state


def sample_prior(spec: ModelSpec, p, K, rng):
    """A ChainState drawn from the prior of ``spec``'s family.

    Adaptation state keeps its initial values.  Hyperparameters are
    resolved for ``(p, K)`` on the fly.
    """
    hyper = spec.hyper.resolve(p, K)
    fam = spec.family
    st = initial_state(fam, p, K)
    local_shape = (p,) if fam.shared else (p, K)
    if fam.prior == "NG":
        st.c = float(sample_exponential(hyper.lambda_c, rng, size=()))
        st.lam = sample_gamma(st.c, 1.0 / st.c, rng, size=local_shape)
        st.tau = sample_half_cauchy(hyper.gamma_hc, rng, size=K)
    elif fam.prior == "HS":
        st.lam = sample_half_cauchy(1.0, rng, size=local_shape)
        st.tau = sample_half_cauchy(1.0, rng, size=K)
        # auxiliaries from their conditionals keep the joint prior exact
        st.nu = 1.0 / sample_gamma(1.0, 1.0 / (1.0 + 1.0 / st.lam ** 2), rng)
        st.omega = 1.0 / sample_gamma(1.0, 1.0 / (1.0 + 1.0 / st.tau ** 2), rng)
    elif fam.prior == "DL":
        a = hyper.dl_a
        alpha = np.full((1 if fam.shared else K, p), a)
        phi = sample_dirichlet(alpha, rng)
        st.phi = phi[0] if fam.shared else phi.T.copy()
        st.tau = sample_gamma(p * a, 2.0, rng, size=K)
        st.eta = sample_exponential(0.5, rng, size=(p, K))
    var = prior_variance(st, fam, hyper)
    st.B = np.sqrt(var) * rng.standard_normal((p, K))
    st.Psi = sample_inv_wishart(hyper.nu0, hyper.S0, rng)
    return st
