"""Analysis package"""
from .comonotony import (PredictedSign, Verdict, CovTestReport, AntitheticReport, ExtremaReport, estimate_cov,
                         sweep, pitt_consistency, antithetic_estimate, running_extrema_conditional)
from .peacock import (ConvexTestFn, PeacockCurve, VegaReport, exp_pii_peacock, centered_antiderivative_peacock,
                      asian_vega_curve, asian_maturity_curve, carr_maturity_curve, scalar_vega_identity)
from .barrier import BarrierKind, BarrierSpec, BoundReport, LadderReport, price_barrier, verify_bounds, barrier_ladder
