import numpy as np
import pytest

from comonotone_mc.analysis.comonotony import Verdict
from comonotone_mc.analysis.peacock import (ConvexTestFn, asian_maturity_curve, asian_vega_curve,
                                            carr_maturity_curve, centered_antiderivative_peacock,
                                            check_midpoint_convexity, exp_pii_peacock, scalar_vega_identity,
                                            vega_closed_form)
from comonotone_mc.errors import DomainError
from comonotone_mc.models.functionals import WeightMeasure
from comonotone_mc.models.grid import TimeGrid
from comonotone_mc.processes.diffusion import DiffusionSpec, GBMSpec
from comonotone_mc.processes.gaussian import BrownianMotion
from comonotone_mc.processes.pii import ExponentialJump, NormalJump, PIISpec

CONVEX = [ConvexTestFn.call_part(1.0), ConvexTestFn.abs_dev(0.5), ConvexTestFn.square(),
          ConvexTestFn.soft_plus(1.0, 0.1), ConvexTestFn.linear()]


@pytest.mark.parametrize("phi", CONVEX, ids=lambda phi: phi.name)
def test_convex_test_functions_pass_midpoint_check(phi):
    assert check_midpoint_convexity(phi, n_checks=5000, seed=4) == 0


def test_convex_test_function_values():
    assert ConvexTestFn.call_part(1.0)(np.array([0.5, 2.0])).tolist() == [0.0, 1.0]
    assert ConvexTestFn.abs_dev(1.0)(0.0) == 1.0
    assert ConvexTestFn.soft_plus(0.0, 1.0)(0.0) == pytest.approx(np.log(2.0))
    assert ConvexTestFn.call_part(1.0).right_derivative(1.0) == 1.0
    with pytest.raises(DomainError):
        ConvexTestFn.soft_plus(1.0, 0.0)


def test_exp_pii_curve_is_monotone_and_anchored(seed):
    spec = PIISpec(intensity=1.0, jump_law=NormalJump(-0.1, 0.3))
    curve = exp_pii_peacock(spec, TimeGrid(1.0, 32), WeightMeasure.lebesgue(), ConvexTestFn.call_part(1.0),
                            [0.0, 0.25, 0.5, 0.75, 1.0], 20000, seed)
    assert curve.estimates[0].mean == 0.0
    assert curve.anchor_row(0.0)["verdict"] == "consistent"
    assert curve.is_monotone()
    assert all(row["predicted"] == ">=0" for row in curve.report_rows())
    assert len(curve.curve_rows()) == 5


def test_exp_pii_linear_control_is_flat(seed):
    spec = PIISpec(intensity=0.5, jump_law=ExponentialJump(rate=3.0))
    curve = exp_pii_peacock(spec, TimeGrid(1.0, 16), WeightMeasure.lebesgue(), ConvexTestFn.linear(),
                            [0.0, 0.5, 1.0], 20000, seed)
    assert curve.estimates[0].mean == pytest.approx(1.0)
    assert curve.is_flat(reference=1.0)
    rows = curve.flat_rows(reference=1.0)
    assert len(rows) == 2 + 3
    assert all(row["verdict"] == Verdict.CONSISTENT.value for row in rows)


def test_centered_curve_starts_at_phi_of_zero(seed):
    grid = TimeGrid(1.0, 32)
    curve = centered_antiderivative_peacock(BrownianMotion(), grid, WeightMeasure.lebesgue(),
                                            ConvexTestFn.call_part(0.0), [0.0, 0.5, 1.0], 20000, seed)
    assert curve.estimates[0].mean == 0.0
    assert curve.estimates[0].std_error == 0.0
    assert curve.is_monotone()
    assert curve.values[-1] > curve.values[1]


def test_centered_curve_uses_prepass_without_closed_form_mean(seed):
    grid = TimeGrid(1.0, 8)
    process = DiffusionSpec(drift=lambda t, x: -x, x0=1.0, drift_lipschitz=1.0)
    curve = centered_antiderivative_peacock(process, grid, WeightMeasure.lebesgue(), ConvexTestFn.square(),
                                            [0.25, 1.0], 2000, seed, prepass_factor=5)
    assert curve.note.startswith("pre-pass mean")


def test_centered_curve_rejects_times_outside_horizon(seed):
    with pytest.raises(DomainError):
        centered_antiderivative_peacock(BrownianMotion(), TimeGrid(1.0, 4), WeightMeasure.lebesgue(),
                                        ConvexTestFn.square(), [0.5, 2.0], 200, seed)


def test_asian_vega_curve_at_zero_strike_is_spot(seed):
    curve = asian_vega_curve(GBMSpec(100.0, 0.0, 0.2), TimeGrid(1.0, 32), [0.1, 0.2, 0.4], 0.0, 20000, seed)
    for est in curve.estimates:
        assert abs(est.mean - 100.0) < 4 * est.std_error


def test_asian_vega_curve_is_monotone(seed):
    curve = asian_vega_curve(GBMSpec(100.0, 0.0, 0.2), TimeGrid(1.0, 32), [0.1, 0.2, 0.3, 0.4], 100.0,
                             20000, seed)
    assert curve.is_monotone()
    assert curve.values[-1] > curve.values[0]


def test_asian_vega_curve_rejects_zero_volatility(seed):
    with pytest.raises(DomainError):
        asian_vega_curve(GBMSpec(), TimeGrid(1.0, 4), [0.0, 0.2], 100.0, 200, seed)


def test_carr_linear_control_is_flat(seed):
    grid = TimeGrid(2.0, 64)
    curve = carr_maturity_curve(grid, [0.25, 0.5, 1.0, 2.0], ConvexTestFn.linear(), 20000, seed)
    assert curve.is_flat(reference=1.0)


def test_carr_call_curve_is_monotone(seed):
    grid = TimeGrid(2.0, 64)
    curve = carr_maturity_curve(grid, [0.25, 0.5, 1.0, 2.0], ConvexTestFn.call_part(1.0), 20000, seed)
    assert curve.is_monotone()


def test_asian_maturity_curve(seed):
    grid = TimeGrid(1.0, 32)
    curve = asian_maturity_curve(GBMSpec(100.0, 0.0, 0.3), grid, [1 / 32, 0.5, 1.0], 100.0, 20000, seed)
    assert curve.estimates[0].mean == 0.0
    assert curve.is_monotone()
    with pytest.raises(DomainError):
        asian_maturity_curve(GBMSpec(), grid, [0.01], 100.0, 200, seed)


def test_vega_closed_forms():
    assert vega_closed_form(ConvexTestFn.linear(), 0.3) == 0.0
    assert vega_closed_form(ConvexTestFn.square(), 0.2) == pytest.approx(0.4 * np.exp(0.04))
    assert vega_closed_form(ConvexTestFn.call_part(1.0), 0.2) == pytest.approx(np.exp(-0.005) / np.sqrt(2 * np.pi))
    assert vega_closed_form(ConvexTestFn.abs_dev(1.0), 0.2) == pytest.approx(
        2 * vega_closed_form(ConvexTestFn.call_part(1.0), 0.2))
    assert vega_closed_form(ConvexTestFn.soft_plus(1.0, 0.1), 0.2) is None


def test_call_vega_matches_closed_form(seed):
    report = scalar_vega_identity(ConvexTestFn.call_part(1.0), 0.2, 1_000_000, seed)
    assert report.relative_error() < 0.01
    assert report.agree
    assert report.nonnegative


def test_square_vega_matches_closed_form(seed):
    report = scalar_vega_identity(ConvexTestFn.square(), 0.2, 1_000_000, seed)
    fd = report.finite_difference
    assert abs(fd.mean - report.closed_form) < 4 * fd.std_error
    assert report.agree


def test_linear_vega_is_zero(seed):
    report = scalar_vega_identity(ConvexTestFn.linear(), 0.3, 200_000, seed)
    assert report.closed_form == 0.0
    assert abs(report.finite_difference.mean) < 4 * report.finite_difference.std_error
    assert abs(report.cameron_martin.mean) < 4 * report.cameron_martin.std_error
    assert [row["verdict"] for row in report.report_rows()] == ["consistent", "consistent"]


def test_vega_rejects_bad_step(seed):
    with pytest.raises(DomainError):
        scalar_vega_identity(ConvexTestFn.square(), 0.1, 100, seed, step=0.2)
    with pytest.raises(DomainError):
        scalar_vega_identity(ConvexTestFn.square(), 0.0, 100, seed)
