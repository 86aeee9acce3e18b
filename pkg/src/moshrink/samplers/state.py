"""Chain state containers and initialization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..model import Family


@dataclass
class MhAdaptState:
    """Adaptive Metropolis bookkeeping.

    ``log_step`` maps a scalar target name ('tau', 'c') to the log of its
    random-walk standard deviation.  ``zeta`` is the Dirichlet proposal
    concentration for each simplex group.  ``t`` counts completed
    iterations and drives the step size ``min(500**-0.5, t**-0.5)``.
    """

    t: int = 0
    log_step: dict = field(default_factory=dict)
    zeta: Optional[np.ndarray] = None
    accept_sum: dict = field(default_factory=dict)
    accept_n: dict = field(default_factory=dict)

    def gain(self):
        return min(500.0 ** -0.5, (self.t + 1) ** -0.5)

    def tally(self, name, alpha):
        alpha = np.asarray(alpha, dtype=np.float64)
        self.accept_sum[name] = self.accept_sum.get(name, 0.0) + alpha
        self.accept_n[name] = self.accept_n.get(name, 0) + 1

    def reset_tallies(self):
        self.accept_sum.clear()
        self.accept_n.clear()

    def acceptance(self):
        return {k: self.accept_sum[k] / self.accept_n[k] for k in self.accept_sum}


@dataclass
class ChainState:
    """Latent quantities of one chain.

    ``lam`` is the NG variance factor or the HS standard-deviation factor;
    it is a p-vector for shared families and p x K for naive ones, as is
    ``phi`` (each naive column is its own simplex).  Blocks a family does
    not use stay ``None``.
    """

    B: np.ndarray
    Psi: np.ndarray
    lam: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None
    c: Optional[float] = None
    nu: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None
    mh: MhAdaptState = field(default_factory=MhAdaptState)

    def copy(self):
        def cp(v):
            return v.copy() if isinstance(v, np.ndarray) else v

        mh = MhAdaptState(
            self.mh.t,
            {k: cp(v) for k, v in self.mh.log_step.items()},
            cp(self.mh.zeta),
            {k: cp(v) for k, v in self.mh.accept_sum.items()},
            dict(self.mh.accept_n),
        )
        return ChainState(
            cp(self.B), cp(self.Psi), cp(self.lam), cp(self.tau), self.c,
            cp(self.nu), cp(self.omega), cp(self.phi), cp(self.eta), mh,
        )

    def blocks(self):
        """Names and values of the blocks that are present."""
        names = ("B", "Psi", "lam", "tau", "c", "nu", "omega", "phi", "eta")
        return {k: getattr(self, k) for k in names if getattr(self, k) is not None}


def initial_state(family, p, K):
    """Prior-central starting point: B = 0, Psi = I, unit scales, flat simplex."""
    family = Family.parse(family)
    local_shape = (p,) if family.shared else (p, K)
    st = ChainState(B=np.zeros((p, K)), Psi=np.eye(K))
    prior = family.prior
    if prior is not None:
        st.tau = np.ones(K)
    if prior == "NG":
        st.lam = np.ones(local_shape)
        st.c = 1.0
        st.mh.log_step = {"tau": np.zeros(K), "c": 0.0}
    elif prior == "HS":
        st.lam = np.ones(local_shape)
        st.nu = np.ones(local_shape)
        st.omega = np.ones(K)
    elif prior == "DL":
        st.phi = np.full(local_shape, 1.0 / p)
        st.eta = np.ones((p, K))
        st.mh.zeta = np.full(1 if family.shared else K, float(p))
    return st
