"""Variational orbit/channel estimator."""

from .abc_sampler import AbcResult, abc_accepts, abc_sample
from .estimator import (
    HistoryRow,
    VmpConfig,
    VmpState,
    VmpTracker,
    ci_threshold,
    initialize,
    predict_aoa,
    read_history,
    sample_ci_orbits,
    step,
    write_history,
)
from .kde import KdePrior, kde_log_density
from .objective import (
    ChannelSurrogate,
    FrameStatistics,
    ObservationModel,
    OrbitSurrogate,
    expected_energy,
    gradient_gram,
    log_q_gamma,
    matched_filter,
    profiled_log_q,
    update_channel,
)
from .optimize import laplace_covariance, numerical_hessian, optimize_gamma

__all__ = [name for name in dir() if not name.startswith("_")]
