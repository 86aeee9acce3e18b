"""Chain runner: executes a family's update schedule and collects draws."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..distributions import rng_stream
from ..exceptions import ChainAbortError
from ..model import Dataset, ModelSpec, loglik_from_ss
from .kernels import SCHEDULES, residual_ss, sufficient_stats, update_B, update_psi
from .state import ChainState, initial_state

log = logging.getLogger(__name__)

TRACKED = ("B", "Psi", "lam", "tau", "c", "phi")


@dataclass
class PosteriorSamples:
    """Retained draws plus full-resolution running summaries.

    ``draws`` holds every ``thin``-th post-burn-in draw; ``means`` and
    ``mean_deviance`` average over *all* post-burn-in iterations.
    """

    family: str
    iterations: int
    burn_in: int
    thin: int
    seed: int
    draws: dict = field(default_factory=dict)
    means: dict = field(default_factory=dict)
    mean_deviance: float = float("nan")
    n_post: int = 0
    acceptance: dict = field(default_factory=dict)
    state: Optional[ChainState] = None

    @property
    def n_retained(self):
        return len(self.draws["B"]) if "B" in self.draws else 0

    @property
    def B_hat(self):
        return self.means["B"]

    @property
    def Psi_hat(self):
        return self.means["Psi"]

    def local_means(self):
        """Posterior mean of the shared local parameter (lambda or phi)."""
        if "phi" in self.means:
            return self.means["phi"]
        return self.means.get("lam")


def _check(block, value, iteration):
    if value is None:
        return
    if not np.all(np.isfinite(value)):
        raise ChainAbortError(
            f"non-finite value in block {block!r} at iteration {iteration}",
            iteration=iteration,
            block=block,
        )


def make_rngs(spec, seed, chain):
    """One independent stream per block of the family's schedule."""
    names = ("B", "Psi", *(s[0] for s in SCHEDULES[spec.family.prior]))
    return {name: rng_stream(seed, chain, name) for name in names}


def sweep(st: ChainState, suff, spec: ModelSpec, rngs, it):
    """One full Gibbs iteration in place; returns the residual cross-product.

    ``spec.hyper`` must already be resolved.  ``it`` is the 1-based
    iteration number that drives the adaptation gain.
    """
    st.mh.t = it - 1
    _check("B", update_B(st, suff, spec, rngs["B"]), it)
    for name, kernel, _ in SCHEDULES[spec.family.prior]:
        kernel(st, spec, rngs[name])
        _check(name, getattr(st, name), it)
    S = residual_ss(st.B, suff)
    _check("Psi", update_psi(st, suff, spec, rngs["Psi"], S=S), it)
    return S


def run_chain(
    data: Dataset,
    spec: ModelSpec,
    iterations,
    burn_in=0,
    thin=1,
    seed=0,
    chain=0,
    state: Optional[ChainState] = None,
    require_standardized=False,
):
    """Run one MCMC chain.

    Per iteration: B, then the family's shrinkage blocks, then Psi.
    Adaptation runs for the whole chain.  Acceptance rates are averaged
    over post-burn-in iterations.
    """
    if not 0 <= burn_in < iterations:
        raise ValueError("need 0 <= burn_in < iterations")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    if require_standardized and not data.standardized:
        raise ValueError("data must be standardized (or pass require_standardized=False)")
    p, K = data.p, data.K
    spec = ModelSpec(spec.family, spec.hyper.resolve(p, K))
    suff = sufficient_stats(data.X, data.Y)
    st = initial_state(spec.family, p, K) if state is None else state.copy()

    rngs = make_rngs(spec, seed, chain)

    n_keep = (iterations - burn_in) // thin
    present = {k: v for k, v in st.blocks().items() if k in TRACKED}
    draws = {k: np.empty((n_keep, *np.shape(v))) for k, v in present.items()}
    sums = {k: np.zeros(np.shape(v)) for k, v in present.items()}
    dev_sum = 0.0
    n_post = 0
    keep = 0

    for it in range(1, iterations + 1):
        if it == burn_in + 1:
            st.mh.reset_tallies()
        S = sweep(st, suff, spec, rngs, it)
        if it <= burn_in:
            continue
        n_post += 1
        dev_sum += -2.0 * loglik_from_ss(S, suff.n, st.Psi)
        for k in sums:
            sums[k] += getattr(st, k)
        if (it - burn_in) % thin == 0 and keep < n_keep:
            for k in draws:
                draws[k][keep] = getattr(st, k)
            keep += 1

    st.mh.t = iterations
    acc = {k: float(np.mean(v)) for k, v in st.mh.acceptance().items()}
    log.debug("chain %s done: acceptance %s", spec.family.value, acc)
    return PosteriorSamples(
        family=spec.family.value,
        iterations=iterations,
        burn_in=burn_in,
        thin=thin,
        seed=seed,
        draws=draws,
        means={k: v / n_post for k, v in sums.items()},
        mean_deviance=dev_sum / n_post,
        n_post=n_post,
        acceptance=acc,
        state=st,
    )
