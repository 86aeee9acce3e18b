from .chain import PosteriorSamples, make_rngs, run_chain, sweep
from .kernels import (
    b_conditional,
    b_posterior_moments,
    prior_variance,
    sufficient_stats,
    update_B,
    update_c_ng,
    update_eta_modl,
    update_hs_blocks,
    update_lambda_mong,
    update_lambda_ng,
    update_mohs_blocks,
    update_naive_locals,
    update_phi_modl,
    update_psi,
    update_tau_modl,
    update_tau_ng,
)
from .prior import sample_prior
from .state import ChainState, MhAdaptState, initial_state

update_tau_mong = update_tau_ng
update_c_mong = update_c_ng
