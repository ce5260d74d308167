"""Process samplers"""
from .base import ProcessSpec
from .gaussian import (GaussianSpec, GaussianVector, BrownianMotion, BrownianSeries, BrownianBridge, FractionalBM, Liouville,
                       ParamWiener, fbm_covariance, bm_series_covariance, power_kernel, mvn_first_kernel,
                       simulate_bm, simulate_bm_series, simulate_bridge, simulate_fbm_cholesky, simulate_fbm_mvn,
                       simulate_liouville, simulate_wiener_param)
from .diffusion import DiffusionSpec, GBMSpec, euler_preserves_monotony, simulate_euler, simulate_gbm_exact
from .pii import (JumpLaw, ConstantJump, ExponentialJump, NormalJump, FixedJump, PIISpec, ExpPII,
                  simulate_pii, log_laplace_pii)

__all__ = [
    "ProcessSpec", "GaussianSpec", "GaussianVector", "BrownianMotion", "BrownianSeries", "BrownianBridge", "FractionalBM",
    "Liouville", "ParamWiener", "fbm_covariance", "bm_series_covariance", "power_kernel", "mvn_first_kernel",
    "simulate_bm", "simulate_bm_series", "simulate_bridge", "simulate_fbm_cholesky", "simulate_fbm_mvn",
    "simulate_liouville", "simulate_wiener_param", "DiffusionSpec", "GBMSpec", "euler_preserves_monotony",
    "simulate_euler", "simulate_gbm_exact", "JumpLaw", "ConstantJump", "ExponentialJump", "NormalJump",
    "FixedJump", "PIISpec", "ExpPII", "simulate_pii", "log_laplace_pii",
]
