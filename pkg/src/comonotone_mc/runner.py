"""Experiment runner - builds every object an experiment names, dispatches to the labs and collects report rows"""

from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Tuple
import logging

import numpy as np

from .analysis.barrier import SMOOTHING_WIDTHS, BarrierKind, BarrierSpec, barrier_ladder, verify_bounds
from .analysis.comonotony import (MIN_PATHS, Verdict, antithetic_estimate, estimate_cov,
                                  pitt_consistency, running_extrema_conditional, sweep)
from .analysis.peacock import (asian_maturity_curve, asian_vega_curve, carr_maturity_curve,
                               centered_antiderivative_peacock, exp_pii_peacock, scalar_vega_identity)
from .config import Settings
from .errors import ConfigError
from .inputs.experiment_config import ExperimentConfig
from .inputs.registry import (build_barrier_kind, build_convex, build_functional, build_measure, build_process,
                              check_keys)
from .models import functionals as fn
from .models.estimate import covariance_matrix_with_errors, pooled_std_error
from .models.gaussian_vectors import (CovMatrix, horn_matrix, nonneg_factorization, pitt_check,
                                      random_nonnegative_cov)
from .models.grid import TimeGrid
from .models.rng import RngStream
from .models.simulation import simulate_paths
from .processes.diffusion import GBMSpec
from .processes.gaussian import BrownianSeries, GaussianVector
from .processes.pii import ExpPII, PIISpec

logger = logging.getLogger(__name__)

CONTROL_PREFIX = "control:"


@dataclass
class RunResult:
    """Report rows and curve rows of one experiment."""
    config: ExperimentConfig
    rows: List[dict] = field(default_factory=list)
    curves: List[dict] = field(default_factory=list)

    @property
    def failures(self) -> List[dict]:
        """Violations, plus negative controls that failed to produce one."""
        bad = []
        for row in self.rows:
            control = row["name"].startswith(CONTROL_PREFIX)
            violated = row["verdict"] == Verdict.VIOLATION.value
            if violated != control:
                bad.append(row)
        return bad

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0

    def summary(self) -> Dict[str, int]:
        counts = {v.value: 0 for v in Verdict}
        for row in self.rows:
            counts[row["verdict"]] += 1
        return counts


@dataclass(frozen=True)
class _Context:
    """Per-run values shared by every lab call."""
    config: ExperimentConfig
    settings: Settings
    z: float
    workers: int
    chunk_size: int

    @property
    def engine(self) -> dict:
        return {"workers": self.workers, "chunk_size": self.chunk_size}

    def process(self, block: Any, location: str = "process"):
        """Build a process and apply the quadrature defaults from the settings."""
        process = build_process(block, location)
        defaults = {"tail_factor": self.settings.fbm_tail_factor, "quad_factor": self.settings.quad_factor}
        if not is_dataclass(process):
            return process
        names = {f.name for f in fields(process)}
        return replace(process, **{k: v for k, v in defaults.items() if k in names})


def _control_row(report_row: dict) -> dict:
    return {**report_row, "name": CONTROL_PREFIX + report_row["name"]}


def _negative_control(block: Any, location: str) -> Tuple[GaussianVector, fn.MonotoneFunctional,
                                                           fn.MonotoneFunctional]:
    """Bivariate Gaussian with correlation rho < 0; Cov(X_0, X_1) >= 0 must be rejected."""
    check_keys(block, {"rho"}, location)
    rho = float(block.get("rho", -0.5))
    if not -1.0 <= rho < 0.0:
        raise ConfigError(f"the negative control needs rho in [-1, 0), got {rho}", f"{location}.rho")
    return GaussianVector(CovMatrix.bivariate(rho)), fn.coordinate(0), fn.coordinate(1)


def _run_negative_control(ctx: _Context, control, n_paths: int) -> dict:
    vector, f, g = control
    rho = vector.cov.entries[0, 1]
    report = estimate_cov(vector, vector.grid(), f, g, n_paths, ctx.config.seed, ctx.z,
                          name=f"gaussian_vector(rho={rho:g}):{f.name}~{g.name}", **ctx.engine)
    return _control_row(report.to_row())


# --- simulate ----------------------------------------------------------------------------------

def _run_simulate(ctx: _Context, result: RunResult) -> None:
    config, block = ctx.config, ctx.config.block
    process = ctx.process(config.process)
    oracle = block.get("oracle", "closed_form")
    if oracle not in ("closed_form", "brownian"):
        raise ConfigError(f"oracle must be 'closed_form' or 'brownian', got {oracle!r}", "simulate.oracle")
    if oracle == "closed_form" and not hasattr(process, "covariance"):
        raise ConfigError(f"{process.name} has no covariance oracle", "simulate.oracle")
    use_deficit = bool(block.get("truncation_deficit", False))
    if use_deficit and not isinstance(process, BrownianSeries):
        raise ConfigError("truncation_deficit only applies to brownian_series", "simulate.truncation_deficit")
    z = float(block.get("z_threshold", ctx.z))
    grid = _case_grid(process, None, config.grid, "grid")

    t = grid.points
    target = np.minimum.outer(t, t) if oracle == "brownian" else process.covariance(grid)
    deficit = np.zeros_like(target)
    if use_deficit:
        deficit = np.abs(np.minimum.outer(t, t) - process.covariance(grid))

    paths = simulate_paths(process, grid, config.n_paths, config.seed, **ctx.engine)
    cov, se = covariance_matrix_with_errors(paths)
    scale = max(1.0, float(np.max(np.abs(target))))
    for i in range(grid.size):
        for j in range(i, grid.size):
            gap = float(cov[i, j] - target[i, j])
            allowed = z * se[i, j] + deficit[i, j] + 1e-12 * scale
            verdict = Verdict.VIOLATION if abs(gap) > allowed else Verdict.CONSISTENT
            result.rows.append({"name": f"{process.name}:cov[{t[i]:g},{t[j]:g}]", "mean": gap,
                                "stderr": float(se[i, j]), "n": config.n_paths, "predicted": "==0",
                                "verdict": verdict.value})
    for k in range(grid.size):
        result.curves.append({"curve": f"{process.name}:variance", "parameter": float(t[k]),
                              "value": float(cov[k, k]), "stderr": float(se[k, k])})
        result.curves.append({"curve": f"{process.name}:variance_oracle", "parameter": float(t[k]),
                              "value": float(target[k, k]), "stderr": 0.0})


# --- comonotony --------------------------------------------------------------------------------

def _case_grid(process, block: Optional[dict], default: TimeGrid, location: str) -> TimeGrid:
    if block is None:
        return process.grid() if isinstance(process, GaussianVector) else default
    check_keys(block, {"horizon", "n_steps"}, location)
    try:
        return TimeGrid(float(block.get("horizon", default.horizon)), int(block.get("n_steps", default.n_steps)))
    except ValueError as e:
        raise ConfigError(str(e), location) from e


def _run_comonotony(ctx: _Context, result: RunResult) -> None:
    config, block = ctx.config, ctx.config.block
    cases = []
    if "cases" in block:
        for i, case in enumerate(block["cases"]):
            loc = f"comonotony.cases[{i}]"
            check_keys(case, {"label", "process", "grid"}, loc)
            process = ctx.process(case.get("process"), f"{loc}.process")
            grid = _case_grid(process, case.get("grid"), config.grid, f"{loc}.grid")
            cases.append((str(case.get("label", process.name)), process, grid))
    else:
        process = ctx.process(config.process)
        cases.append((config.name, process, _case_grid(process, None, config.grid, "grid")))
    functionals = [build_functional(b, f"comonotony.functionals[{i}]")
                   for i, b in enumerate(block.get("functionals", ["terminal", "running_max"]))]
    pairs = block.get("pairs")
    if pairs is not None:
        pairs = [tuple(int(k) for k in p) for p in pairs]
        if any(len(p) != 2 or not all(0 <= k < len(functionals) for k in p) for p in pairs):
            raise ConfigError("every pair must hold two functional indices", "comonotony.pairs")
    control = _negative_control(block["negative_control"], "comonotony.negative_control") \
        if "negative_control" in block else None
    extrema = block.get("running_extrema")
    if extrema is not None:
        check_keys(extrema, {"level", "x_list"}, "comonotony.running_extrema")
        if "level" not in extrema or "x_list" not in extrema:
            raise ConfigError("needs 'level' and 'x_list'", "comonotony.running_extrema")
    kurtosis_limit = float(block.get("kurtosis_limit", ctx.settings.kurtosis_limit))

    reports = sweep(cases, functionals, config.n_paths, config.seed, pairs=pairs, z_threshold=ctx.z,
                    kurtosis_limit=kurtosis_limit, **ctx.engine)
    result.rows.extend(r.to_row() for r in reports)
    if control is not None:
        result.rows.append(_run_negative_control(ctx, control, config.n_paths))
    if extrema is not None:
        label, process, grid = cases[0]
        report = running_extrema_conditional(process, grid, float(extrema["level"]), extrema["x_list"],
                                             config.n_paths, config.seed, ctx.z, **ctx.engine)
        for c in report.conditionals:
            pooled = float(np.hypot(c.std_error, report.unconditional.std_error))
            result.rows.append({"name": f"{label}:extrema[y={report.level:g}|X_T>={c.x:g}]",
                                "mean": c.probability - report.unconditional.mean, "stderr": pooled,
                                "n": c.n_conditioned, "predicted": ">=0", "verdict": c.verdict.value})
            result.curves.append({"curve": f"{label}:extrema[y={report.level:g}]", "parameter": c.x,
                                  "value": c.probability, "stderr": c.std_error})


# --- antithetic --------------------------------------------------------------------------------

def _ratio_row(name: str, report, expect: Optional[Tuple[float, float]], monotone: bool) -> dict:
    ratio = report.variance_ratio
    low, high = report.ratio_ci if report.ratio_ci else (ratio, ratio)
    half_width = 0.5 * (high - low)
    if expect is not None:
        predicted = f"in[{expect[0]:g},{expect[1]:g}]"
        inside = expect[0] <= low and high <= expect[1]
        verdict = Verdict.CONSISTENT if inside else Verdict.VIOLATION
    elif monotone:
        predicted = "<=0.5"
        verdict = Verdict.VIOLATION if low > 0.5 else Verdict.CONSISTENT
    else:
        predicted, verdict = "none", Verdict.INCONCLUSIVE
    return {"name": name, "mean": ratio, "stderr": half_width, "n": report.plain.n_samples,
            "predicted": predicted, "verdict": verdict.value}


def _run_antithetic(ctx: _Context, result: RunResult) -> None:
    config, block = ctx.config, ctx.config.block
    process = ctx.process(config.process)
    items = []
    for i, item in enumerate(block.get("functionals", ["terminal"])):
        loc = f"antithetic.functionals[{i}]"
        if isinstance(item, dict) and "functional" in item:
            check_keys(item, {"functional", "expect_ratio"}, loc)
            f = build_functional(item["functional"], f"{loc}.functional")
            expect = item.get("expect_ratio")
            if expect is not None and (len(expect) != 2 or float(expect[0]) > float(expect[1])):
                raise ConfigError("expect_ratio must be [low, high]", f"{loc}.expect_ratio")
            items.append((f, tuple(float(e) for e in expect) if expect is not None else None))
        else:
            items.append((build_functional(item, loc), None))
    resamples = int(block.get("bootstrap_resamples", ctx.settings.bootstrap_resamples))
    confidence = float(block.get("confidence", ctx.settings.bootstrap_confidence))

    for f, expect in items:
        report = antithetic_estimate(process, config.grid, f, config.n_paths, config.seed, resamples,
                                     confidence, ctx.z, **ctx.engine)
        monotone = f.monotonicity is not fn.Monotonicity.NONE
        result.rows.append(_ratio_row(f"antithetic:{report.name}:variance_ratio", report, expect, monotone))
        pooled = pooled_std_error(report.plain, report.antithetic)
        result.rows.append({"name": f"antithetic:{report.name}:mean_gap", "mean": report.mean_gap,
                            "stderr": pooled, "n": report.plain.n_samples, "predicted": "==0",
                            "verdict": (Verdict.CONSISTENT if report.unbiased else Verdict.VIOLATION).value})


# --- peacock -----------------------------------------------------------------------------------

CURVE_KEYS = {
    "exp_pii": {"process", "measure", "phi", "sigma_grid"},
    "centered": {"process", "measure", "phi", "t_grid"},
    "asian_vega": {"process", "sigma_grid", "strike"},
    "asian_maturity": {"process", "t_grid", "strike"},
    "carr": {"phi", "t_grid"},
    "vega": {"phi", "sigma", "n_samples", "step", "closed_form_tolerance"},
}
COMMON_CURVE_KEYS = {"type", "label", "control", "reference", "anchor"}


def _curve_process(ctx: _Context, item: dict, location: str):
    block = item.get("process", ctx.config.process)
    if block is None:
        raise ConfigError("curve needs a process", f"{location}.process")
    return ctx.process(block, f"{location}.process")


def _require(item: dict, key: str, location: str) -> Any:
    if key not in item:
        raise ConfigError(f"missing required key {key!r}", f"{location}.{key}")
    return item[key]


def _plan_curve(ctx: _Context, item: dict, location: str) -> Callable[[], Any]:
    """Build everything the curve names and return the deferred computation."""
    if not isinstance(item, dict) or item.get("type") not in CURVE_KEYS:
        raise ConfigError(f"curve type must be one of {', '.join(CURVE_KEYS)}", f"{location}.type")
    kind = item["type"]
    check_keys(item, CURVE_KEYS[kind] | COMMON_CURVE_KEYS, location)
    config, seed, n = ctx.config, ctx.config.seed, ctx.config.n_paths
    grid = config.grid

    if kind == "exp_pii":
        spec = _curve_process(ctx, item, location)
        if isinstance(spec, ExpPII):
            spec = spec.pii
        if not isinstance(spec, PIISpec):
            raise ConfigError("exp_pii curves need a pii process", f"{location}.process")
        measure = build_measure(item.get("measure", "terminal"), f"{location}.measure")
        phi = build_convex(_require(item, "phi", location), f"{location}.phi")
        sigmas = _require(item, "sigma_grid", location)
        return lambda: exp_pii_peacock(spec, grid, measure, phi, sigmas, n, seed, **ctx.engine)
    if kind == "centered":
        process = _curve_process(ctx, item, location)
        measure = build_measure(item.get("measure", "lebesgue"), f"{location}.measure")
        phi = build_convex(_require(item, "phi", location), f"{location}.phi")
        ts = _require(item, "t_grid", location)
        return lambda: centered_antiderivative_peacock(process, grid, measure, phi, ts, n, seed,
                                                       prepass_factor=ctx.settings.mean_prepass_factor,
                                                       **ctx.engine)
    if kind in ("asian_vega", "asian_maturity"):
        base = _curve_process(ctx, item, location)
        if not isinstance(base, GBMSpec):
            raise ConfigError(f"{kind} curves need a gbm process", f"{location}.process")
        strike = float(item.get("strike", base.s0))
        if kind == "asian_vega":
            sigmas = _require(item, "sigma_grid", location)
            return lambda: asian_vega_curve(base, grid, sigmas, strike, n, seed, **ctx.engine)
        ts = _require(item, "t_grid", location)
        return lambda: asian_maturity_curve(base, grid, ts, strike, n, seed, **ctx.engine)
    if kind == "carr":
        phi = build_convex(_require(item, "phi", location), f"{location}.phi")
        ts = _require(item, "t_grid", location)
        return lambda: carr_maturity_curve(grid, ts, phi, n, seed, **ctx.engine)

    phi = build_convex(_require(item, "phi", location), f"{location}.phi")
    sigma = float(_require(item, "sigma", location))
    n_samples = int(item.get("n_samples", n))
    step = float(item.get("step", ctx.settings.finite_difference_step))
    return lambda: scalar_vega_identity(phi, sigma, n_samples, seed, step, ctx.z)


def _vega_rows(report, tolerance: Optional[float]) -> List[dict]:
    rows = report.report_rows()
    if tolerance is not None and report.closed_form is not None:
        error = report.relative_error()
        if error is None:
            gap = abs(report.finite_difference.mean - report.closed_form)
            error, predicted = gap, f"abs<={tolerance:g}"
        else:
            predicted = f"<={tolerance:g}"
        verdict = Verdict.CONSISTENT if error <= tolerance else Verdict.VIOLATION
        rows.append({"name": f"vega[{report.phi.name},sigma={report.sigma:g}]:closed_form", "mean": error,
                     "stderr": 0.0, "n": report.finite_difference.n_samples, "predicted": predicted,
                     "verdict": verdict.value})
    return rows


def _run_peacock(ctx: _Context, result: RunResult) -> None:
    items = ctx.config.block.get("curves", [])
    if not items:
        raise ConfigError("at least one curve is required", "peacock.curves")
    plans = []
    for i, item in enumerate(items):
        loc = f"peacock.curves[{i}]"
        plan = _plan_curve(ctx, item, loc)
        control = item.get("control", "monotone")
        if control not in ("monotone", "flat"):
            raise ConfigError(f"control must be 'monotone' or 'flat', got {control!r}", f"{loc}.control")
        plans.append((item, plan, control))

    for item, plan, control in plans:
        outcome = plan()
        if item["type"] == "vega":
            result.rows.extend(_vega_rows(outcome, item.get("closed_form_tolerance")))
            continue
        curve = replace(outcome, name=item["label"]) if "label" in item else outcome
        if curve.note:
            logger.warning("%s: %s", curve.name, curve.note)
        reference = item.get("reference")
        if control == "flat":
            result.rows.extend(curve.flat_rows(None if reference is None else float(reference), ctx.z))
        else:
            result.rows.extend(curve.report_rows(ctx.z))
        if "anchor" in item:
            result.rows.append(curve.anchor_row(float(item["anchor"]), ctx.z))
        result.curves.extend(curve.curve_rows())


# --- barrier -----------------------------------------------------------------------------------

def _run_barrier(ctx: _Context, result: RunResult) -> None:
    config, block = ctx.config, ctx.config.block
    process = ctx.process(config.process)
    strike = float(_require(block, "strike", "barrier"))
    monitor_until = block.get("monitor_until")
    monitor_until = None if monitor_until is None else float(monitor_until)
    kinds = [build_barrier_kind(k, f"barrier.kinds[{i}]")
             for i, k in enumerate(block.get("kinds", [k.value for k in BarrierKind]))]
    specs = []
    for kind in kinds:
        key = "level" if kind.is_down or "up_level" not in block else "up_level"
        level = float(_require(block, key, "barrier"))
        try:
            specs.append(BarrierSpec(kind, strike, level, monitor_until))
        except ValueError as e:
            raise ConfigError(str(e), f"barrier.{key}") from e
    discount = float(block.get("discount", 1.0))
    widths = tuple(float(w) for w in block.get("smoothing", SMOOTHING_WIDTHS))
    ladder = block.get("ladder")
    if ladder is not None:
        check_keys(ladder, {"kind", "levels"}, "barrier.ladder")
        ladder_kind = build_barrier_kind(ladder.get("kind", "down_in"), "barrier.ladder.kind")
        ladder_levels = _require(ladder, "levels", "barrier.ladder")

    reports = []
    for spec in specs:
        report = verify_bounds(process, config.grid, spec, config.n_paths, config.seed, discount, ctx.z, widths,
                               **ctx.engine)
        reports.append(report)
        row = report.bound_row()
        if report.assumption_note:
            row["predicted"] = f"{row['predicted']} ({report.assumption_note})"
        result.rows.append(row)
        curve = f"smoothed:{spec.name}"
        result.curves.append({"curve": curve, "parameter": 0.0, "value": report.slack,
                              "stderr": report.slack_std_error})
        for s in report.smoothed:
            result.curves.append({"curve": curve, "parameter": s.eps, "value": s.slack, "stderr": s.std_error})
    if reports:
        residual = max(r.parity_residual for r in reports)
        scale = max(r.parity_scale for r in reports)
        tolerance = ctx.settings.parity_tolerance
        ok = all(r.parity_ok(tolerance) for r in reports)
        result.rows.append({"name": "parity:barrier+partner-vanilla", "mean": residual, "stderr": 0.0,
                            "n": config.n_paths, "predicted": f"<={tolerance:g}*{max(scale, 1.0):g}",
                            "verdict": (Verdict.CONSISTENT if ok else Verdict.VIOLATION).value})
    if ladder is not None:
        report = barrier_ladder(process, config.grid, ladder_kind, strike, ladder_levels, config.n_paths,
                                config.seed, monitor_until, **ctx.engine)
        result.rows.append(report.report_row())
        for level, price in zip(report.levels, report.prices):
            result.curves.append({"curve": f"ladder:{ladder_kind.value}(K={strike:g})", "parameter": level,
                                  "value": price.mean, "stderr": price.std_error})


# --- pitt --------------------------------------------------------------------------------------

DEFAULT_PITT_MAPS = ("identity", "tanh", "cube")
# Matrix draws sit far above the path streams.
RANDOM_MATRIX_STREAM = 1 << 40


def _pitt_matrix(block: Any) -> Tuple[str, CovMatrix]:
    if block in (None, "horn"):
        return "horn", horn_matrix()
    try:
        return "matrix", CovMatrix(np.asarray(block, dtype=np.float64))
    except (ValueError, ArithmeticError) as e:
        raise ConfigError(str(e), "pitt.matrix") from e


def _run_pitt(ctx: _Context, result: RunResult) -> None:
    config, block = ctx.config, ctx.config.block
    label, cov = _pitt_matrix(block.get("matrix"))
    rank = block.get("rank")
    expect = block.get("expect")
    if expect not in (None, "witness", "no_witness"):
        raise ConfigError("expect must be 'witness' or 'no_witness'", "pitt.expect")
    statistical = block.get("statistical")
    if statistical is not None:
        check_keys(statistical, {"maps", "n_paths", "random_matrices", "dimension"}, "pitt.statistical")
        map_names = statistical.get("maps", list(DEFAULT_PITT_MAPS))
        unknown = [m for m in map_names if m not in fn.SCALAR_MAPS]
        if unknown or not map_names:
            raise ConfigError(f"unknown scalar map {unknown[0]!r}" if unknown else "at least one map is required",
                              "pitt.statistical.maps")
        maps = [fn.SCALAR_MAPS[m] for m in map_names]
        n_stat = int(statistical.get("n_paths", config.n_paths))
        if n_stat < MIN_PATHS:
            raise ConfigError(f"needs at least {MIN_PATHS} paths", "pitt.statistical.n_paths")
        n_random = int(statistical.get("random_matrices", 0))
        if n_random < 0:
            raise ConfigError(f"must be >= 0, got {n_random}", "pitt.statistical.random_matrices")
        dimension = int(statistical.get("dimension", 3))
        if dimension < 2:
            raise ConfigError(f"must be >= 2, got {dimension}", "pitt.statistical.dimension")
    control = _negative_control(block["negative_control"], "pitt.negative_control") \
        if "negative_control" in block else None
    d = cov.dimension

    holds = pitt_check(cov)
    result.rows.append({"name": f"pitt_check[{label}]", "mean": float(np.min(cov.entries)), "stderr": 0.0, "n": d,
                        "predicted": ">=0",
                        "verdict": (Verdict.CONSISTENT if holds else Verdict.INCONCLUSIVE).value})
    sv = np.linalg.svd(cov.entries, compute_uv=False)
    result.rows.append({"name": f"numerical_rank[{label}]", "mean": float(cov.numerical_rank()), "stderr": 0.0,
                        "n": d, "predicted": f"sigma_min/sigma_max={sv[-1] / sv[0]:.3g}",
                        "verdict": Verdict.CONSISTENT.value})
    factorization = nonneg_factorization(cov, None if rank is None else int(rank),
                                         float(block.get("tol", 1e-8)),
                                         int(block.get("max_iter", ctx.settings.factorization_max_iter)),
                                         int(block.get("restarts", ctx.settings.factorization_restarts)),
                                         config.seed, ctx.workers)
    if expect is None:
        verdict = Verdict.CONSISTENT
    else:
        verdict = Verdict.CONSISTENT if factorization.success == (expect == "witness") else Verdict.VIOLATION
    result.rows.append({"name": f"factorization[{label}]:{factorization.label}", "mean": factorization.residual,
                        "stderr": 0.0, "n": factorization.restarts,
                        "predicted": expect.replace("_", " ") if expect else "none",
                        "verdict": verdict.value})

    if statistical is not None:
        reports = pitt_consistency(f"gaussian_vector[{label}]", cov, maps, n_stat, config.seed, ctx.z,
                                   ctx.settings.kurtosis_limit, **ctx.engine)
        for r in reports:
            row = r.to_row()
            if not holds and r.predicted_sign.value != "none":
                row.update(predicted="none", verdict=Verdict.INCONCLUSIVE.value)
            result.rows.append(row)
        for k in range(n_random):
            random_cov = random_nonnegative_cov(dimension, RngStream(config.seed, RANDOM_MATRIX_STREAM + k))
            reports = pitt_consistency(f"gaussian_vector[random{k}]", random_cov, maps, n_stat, config.seed,
                                       ctx.z, ctx.settings.kurtosis_limit, **ctx.engine)
            result.rows.extend(r.to_row() for r in reports)
    if control is not None:
        result.rows.append(_run_negative_control(ctx, control, config.n_paths))


DISPATCH = {
    "simulate": _run_simulate,
    "comonotony": _run_comonotony,
    "antithetic": _run_antithetic,
    "peacock": _run_peacock,
    "barrier": _run_barrier,
    "pitt": _run_pitt,
}


def run_experiment(config: ExperimentConfig, settings: Optional[Settings] = None) -> RunResult:
    """
    Run one experiment.

    Config errors surface before any simulation starts: each lab builds every named object first.
    """
    settings = settings or Settings()
    ctx = _Context(
        config=config,
        settings=settings,
        z=config.z_threshold if config.z_threshold is not None else settings.z_threshold,
        workers=config.workers or settings.workers,
        chunk_size=config.chunk_size or settings.chunk_size,
    )
    logger.info("experiment %s (%s): %d paths, seed %d, %d workers", config.name, config.kind, config.n_paths,
                config.seed, ctx.workers)
    result = RunResult(config)
    DISPATCH[config.kind](ctx, result)
    logger.info("experiment %s finished: %s", config.name, result.summary())
    return result

