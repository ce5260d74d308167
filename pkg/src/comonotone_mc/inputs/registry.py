"""Registry - named processes, functionals, convex test functions and weight measures for experiment configs"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ..analysis.barrier import BarrierKind
from ..analysis.peacock import ConvexTestFn
from ..errors import ComonotoneError, ConfigError
from ..models import functionals as fn
from ..models.functionals import MonotoneFunctional, WeightMeasure
from ..models.gaussian_vectors import CovMatrix, horn_matrix
from ..processes.diffusion import DiffusionSpec, GBMSpec
from ..processes.gaussian import (BrownianBridge, BrownianMotion, BrownianSeries, FractionalBM, GaussianVector,
                                  Liouville, ParamWiener, mvn_first_kernel, power_kernel)
from ..processes.pii import ConstantJump, ExpPII, ExponentialJump, FixedJump, JumpLaw, NormalJump, PIISpec

REQUIRED = object()


@dataclass(frozen=True)
class RegistryEntry:
    """A named builder with its parameter schema (name -> default, REQUIRED when mandatory)."""
    name: str
    builder: Callable[..., Any]
    parameters: Dict[str, Any] = field(default_factory=dict)
    description: str = ""
    monotonicity: Optional[str] = None

    def schema_text(self) -> str:
        parts = []
        for key, default in self.parameters.items():
            parts.append(key if default is REQUIRED else f"{key}={default!r}")
        return ", ".join(parts)


def check_keys(block: Dict[str, Any], allowed, location: str) -> None:
    """Unknown keys raise ConfigError at `location.key`."""
    if not isinstance(block, dict):
        raise ConfigError("expected an object", location)
    for key in block:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{location}.{key}" if location else key)


def _resolve(entry: RegistryEntry, block: Dict[str, Any], location: str, skip=("name",)) -> Dict[str, Any]:
    check_keys(block, set(entry.parameters) | set(skip), location)
    params = {}
    for key, default in entry.parameters.items():
        if key in block:
            params[key] = block[key]
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}", f"{location}.{key}")
        else:
            params[key] = default
    return params


def _lookup(table: Dict[str, RegistryEntry], block: Any, kind: str, location: str) -> RegistryEntry:
    if isinstance(block, str):
        block = {"name": block}
    if not isinstance(block, dict) or "name" not in block:
        raise ConfigError(f"{kind} needs a 'name'", location)
    name = block["name"]
    if name not in table:
        raise ConfigError(f"unknown {kind} {name!r}; known: {', '.join(sorted(table))}", f"{location}.name")
    return table[name]


def _build(table: Dict[str, RegistryEntry], block: Any, kind: str, location: str):
    if isinstance(block, str):
        block = {"name": block}
    entry = _lookup(table, block, kind, location)
    params = _resolve(entry, block, location)
    try:
        return entry.builder(location=location, **params)
    except ConfigError:
        raise
    except (ComonotoneError, TypeError, ValueError) as e:
        raise ConfigError(str(e), location) from e


# --- kernels and jump laws ---------------------------------------------------------------------

def _liouville_kernel(block: Any, location: str):
    if block in (None, "constant"):
        return (lambda u: 1.0 + 0.0 * u), "constant"
    if isinstance(block, dict) and block.get("name") == "power":
        check_keys(block, {"name", "hurst"}, location)
        return power_kernel(float(block.get("hurst", 0.5))), f"power(H={block.get('hurst', 0.5)})"
    raise ConfigError("kernel must be 'constant' or {'name': 'power', 'hurst': H}", location)


def _wiener_kernel(block: Any, location: str):
    if block in (None, "indicator"):
        return (lambda t, s: 1.0 * (s <= t)), "indicator"
    if isinstance(block, dict) and block.get("name") == "mvn_first":
        check_keys(block, {"name", "hurst"}, location)
        return mvn_first_kernel(float(block.get("hurst", 0.5))), f"mvn_first(H={block.get('hurst', 0.5)})"
    raise ConfigError("kernel must be 'indicator' or {'name': 'mvn_first', 'hurst': H}", location)


JUMP_LAWS: Dict[str, RegistryEntry] = {
    "constant": RegistryEntry("constant", lambda location, value: ConstantJump(float(value)), {"value": 1.0}),
    "exponential": RegistryEntry("exponential", lambda location, rate: ExponentialJump(float(rate)), {"rate": 1.0}),
    "normal": RegistryEntry("normal", lambda location, loc, scale: NormalJump(float(loc), float(scale)),
                            {"loc": 0.0, "scale": 1.0}),
}


def build_jump_law(block: Any, location: str) -> JumpLaw:
    return _build(JUMP_LAWS, block, "jump law", location)


# --- processes ---------------------------------------------------------------------------------

def _drift(block: Any, location: str):
    """Drift families b(t, x) with their Lipschitz constant in x."""
    if block in (None, "zero"):
        return (lambda t, x: 0.0 * x), 0.0
    check_keys(block, {"name", "a", "b", "kappa", "mean"}, location)
    name = block.get("name")
    if name == "linear":
        a, b = float(block.get("a", 0.0)), float(block.get("b", 0.0))
        return (lambda t, x: a + b * x), abs(b)
    if name == "ou":
        kappa, mean = float(block.get("kappa", 1.0)), float(block.get("mean", 0.0))
        return (lambda t, x: kappa * (mean - x)), abs(kappa)
    raise ConfigError(f"unknown drift {name!r}; known: zero, linear, ou", f"{location}.name")


def _vol(block: Any, location: str):
    """Volatility families sigma(t, x) and whether they are deterministic."""
    if block is None:
        return (lambda t, x: 1.0 + 0.0 * x), True
    check_keys(block, {"name", "sigma", "sigma0", "slope"}, location)
    name = block.get("name")
    if name == "constant":
        sigma = float(block.get("sigma", 1.0))
        return (lambda t, x: sigma + 0.0 * x), True
    if name == "time":
        sigma0, slope = float(block.get("sigma0", 1.0)), float(block.get("slope", 0.0))
        return (lambda t, x: sigma0 + slope * t + 0.0 * x), True
    if name == "proportional":
        sigma = float(block.get("sigma", 0.2))
        return (lambda t, x: sigma * np.abs(x)), False
    raise ConfigError(f"unknown volatility {name!r}; known: constant, time, proportional", f"{location}.name")


def _build_diffusion(location, drift, vol, x0, label):
    b, lip = _drift(drift, f"{location}.drift")
    sigma, deterministic = _vol(vol, f"{location}.vol")
    return DiffusionSpec(drift=b, vol=sigma, x0=float(x0), drift_lipschitz=lip, deterministic_vol=deterministic,
                         label=label)


def _build_pii(location, drift_rate, variance_rate, intensity, jump, fixed_jumps, label):
    mu, v = float(drift_rate), float(variance_rate)
    fixed = []
    for i, item in enumerate(fixed_jumps or []):
        loc = f"{location}.fixed_jumps[{i}]"
        check_keys(item, {"time", "law"}, loc)
        if "time" not in item:
            raise ConfigError("missing required key 'time'", f"{loc}.time")
        fixed.append(FixedJump(float(item["time"]), build_jump_law(item.get("law", "constant"), f"{loc}.law")))
    law = build_jump_law(jump, f"{location}.jump") if jump is not None else None
    return PIISpec(drift=lambda t: mu * t, time_change=lambda t: v * t, intensity=float(intensity),
                   jump_law=law, fixed_jumps=tuple(fixed), label=label)


_PII_PARAMS = {"drift_rate": 0.0, "variance_rate": 1.0, "intensity": 0.0, "jump": None, "fixed_jumps": None,
               "label": "pii"}


def _build_exp_pii(location, s0, **pii):
    return ExpPII(_build_pii(location, **pii), float(s0))


def _build_gaussian_vector(location, cov, rho):
    if cov is None:
        return GaussianVector(CovMatrix.bivariate(float(rho)))
    if cov == "horn":
        return GaussianVector(horn_matrix())
    return GaussianVector(CovMatrix(np.asarray(cov, dtype=np.float64)))


def _build_liouville(location, kernel, quad_steps, rule):
    f, label = _liouville_kernel(kernel, f"{location}.kernel")
    return Liouville(kernel=f, quad_steps=quad_steps, rule=rule, label=label)


def _build_param_wiener(location, kernel, tail_cutoff, quad_steps):
    f, label = _wiener_kernel(kernel, f"{location}.kernel")
    return ParamWiener(kernel=f, tail_cutoff=tail_cutoff, quad_steps=quad_steps, label=label)


def _build_gbm_euler(location, s0, rate, vol):
    return GBMSpec(float(s0), float(rate), float(vol)).as_diffusion()


PROCESSES: Dict[str, RegistryEntry] = {
    "brownian_motion": RegistryEntry("brownian_motion", lambda location: BrownianMotion(), {},
                                     "standard Brownian motion"),
    "brownian_series": RegistryEntry("brownian_series", lambda location, n_terms: BrownianSeries(int(n_terms)),
                                     {"n_terms": 1000}, "truncated cosine-series Brownian motion"),
    "brownian_bridge": RegistryEntry("brownian_bridge", lambda location: BrownianBridge(), {},
                                     "Brownian bridge pinned at 0 at both ends"),
    "fbm": RegistryEntry("fbm", lambda location, H, method, tail_cutoff, quad_steps:
                         FractionalBM(float(H), method, tail_cutoff, quad_steps),
                         {"H": 0.5, "method": "cholesky", "tail_cutoff": None, "quad_steps": None},
                         "fractional Brownian motion with Hurst exponent H"),
    "liouville": RegistryEntry("liouville", _build_liouville,
                               {"kernel": "constant", "quad_steps": None, "rule": "midpoint"},
                               "Gaussian moving average int_0^t f(t-s) dW_s"),
    "param_wiener": RegistryEntry("param_wiener", _build_param_wiener,
                                  {"kernel": "indicator", "tail_cutoff": None, "quad_steps": None},
                                  "parametrized Wiener integral int_0^inf f(t,s) dW_s"),
    "diffusion": RegistryEntry("diffusion", _build_diffusion,
                               {"drift": None, "vol": None, "x0": 0.0, "label": "diffusion"},
                               "Brownian diffusion simulated by its Euler scheme"),
    "gbm": RegistryEntry("gbm", lambda location, s0, rate, vol: GBMSpec(float(s0), float(rate), float(vol)),
                         {"s0": 100.0, "rate": 0.0, "vol": 0.2}, "Black-Scholes model, exact sampling"),
    "gbm_euler": RegistryEntry("gbm_euler", _build_gbm_euler, {"s0": 100.0, "rate": 0.0, "vol": 0.2},
                               "Black-Scholes model through the Euler scheme"),
    "pii": RegistryEntry("pii", _build_pii, dict(_PII_PARAMS),
                         "drift + time-changed BM + compound Poisson + fixed-time jumps"),
    "exp_pii": RegistryEntry("exp_pii", _build_exp_pii, {"s0": 100.0, **_PII_PARAMS},
                             "martingale exponential s0 exp(X_t - Psi(1,t)) of a PII"),
    "gaussian_vector": RegistryEntry("gaussian_vector", _build_gaussian_vector, {"cov": None, "rho": 0.0},
                                     "finite Gaussian vector laid out as a path"),
}


def build_process(block: Any, location: str = "process"):
    return _build(PROCESSES, block, "process", location)


# --- weight measures ---------------------------------------------------------------------------

MEASURES: Dict[str, RegistryEntry] = {
    "dirac": RegistryEntry("dirac", lambda location, t: WeightMeasure.dirac(float(t)), {"t": REQUIRED}),
    "terminal": RegistryEntry("terminal", lambda location: WeightMeasure.terminal(), {}),
    "lebesgue": RegistryEntry("lebesgue", lambda location, normalized: WeightMeasure.lebesgue(bool(normalized)),
                              {"normalized": True}),
    "exponential": RegistryEntry("exponential", lambda location, rate: WeightMeasure.exponential(float(rate)),
                                 {"rate": 0.0}),
}


def build_measure(block: Any, location: str = "measure") -> WeightMeasure:
    return _build(MEASURES, block, "measure", location)


# --- functionals -------------------------------------------------------------------------------

def _opt(t):
    return None if t is None else float(t)


def _build_integral(location, measure):
    return fn.integral(build_measure(measure, f"{location}.measure"))


def _build_negate(location, of):
    return fn.negate(build_functional(of, f"{location}.of"))


def _build_compose(location, map, of):
    if map not in fn.SCALAR_MAPS:
        raise ConfigError(f"unknown scalar map {map!r}; known: {', '.join(sorted(fn.SCALAR_MAPS))}",
                          f"{location}.map")
    return fn.compose(fn.SCALAR_MAPS[map], build_functional(of, f"{location}.of"))


FUNCTIONALS: Dict[str, RegistryEntry] = {
    "terminal": RegistryEntry("terminal", lambda location: fn.terminal(), {}, "X_T", "non_decreasing"),
    "coordinate": RegistryEntry("coordinate", lambda location, k: fn.coordinate(int(k)), {"k": REQUIRED},
                                "node value X_{t_k}", "non_decreasing"),
    "running_max": RegistryEntry("running_max", lambda location, monitor_until: fn.running_max(_opt(monitor_until)),
                                 {"monitor_until": None}, "sup of X over the window", "non_decreasing"),
    "running_min": RegistryEntry("running_min", lambda location, monitor_until: fn.running_min(_opt(monitor_until)),
                                 {"monitor_until": None}, "inf of X over the window", "non_decreasing"),
    "integral": RegistryEntry("integral", _build_integral, {"measure": "lebesgue"}, "int X dmu",
                              "non_decreasing"),
    "call_payoff": RegistryEntry("call_payoff", lambda location, strike: fn.call_payoff(float(strike)),
                                 {"strike": REQUIRED}, "(X_T - K)_+", "non_decreasing"),
    "smoothed_down": RegistryEntry("smoothed_down", lambda location, level, eps, monitor_until:
                                   fn.smoothed_down_indicator(float(level), float(eps), _opt(monitor_until)),
                                   {"level": REQUIRED, "eps": REQUIRED, "monitor_until": None},
                                   "smoothed 1{min <= L}", "non_increasing"),
    "smoothed_up": RegistryEntry("smoothed_up", lambda location, level, eps, monitor_until:
                                 fn.smoothed_up_indicator(float(level), float(eps), _opt(monitor_until)),
                                 {"level": REQUIRED, "eps": REQUIRED, "monitor_until": None},
                                 "smoothed 1{max >= L}", "non_decreasing"),
    "down_indicator": RegistryEntry("down_indicator", lambda location, level, monitor_until:
                                    fn.down_indicator(float(level), _opt(monitor_until)),
                                    {"level": REQUIRED, "monitor_until": None}, "1{min <= L}", "non_increasing"),
    "up_indicator": RegistryEntry("up_indicator", lambda location, level, monitor_until:
                                  fn.up_indicator(float(level), _opt(monitor_until)),
                                  {"level": REQUIRED, "monitor_until": None}, "1{max > L}", "non_decreasing"),
    "negate": RegistryEntry("negate", _build_negate, {"of": REQUIRED}, "-F", "flipped"),
    "compose": RegistryEntry("compose", _build_compose, {"map": REQUIRED, "of": REQUIRED}, "g(F)",
                             "sign rule"),
}


def build_functional(block: Any, location: str = "functional") -> MonotoneFunctional:
    return _build(FUNCTIONALS, block, "functional", location)


# --- convex test functions ---------------------------------------------------------------------

CONVEX_FUNCTIONS: Dict[str, RegistryEntry] = {
    "call_part": RegistryEntry("call_part", lambda location, strike: ConvexTestFn.call_part(float(strike)),
                               {"strike": REQUIRED}, "(x - K)_+"),
    "abs_dev": RegistryEntry("abs_dev", lambda location, strike: ConvexTestFn.abs_dev(float(strike)),
                             {"strike": REQUIRED}, "|x - K|"),
    "square": RegistryEntry("square", lambda location: ConvexTestFn.square(), {}, "x^2"),
    "soft_plus": RegistryEntry("soft_plus", lambda location, strike, eps:
                               ConvexTestFn.soft_plus(float(strike), float(eps)),
                               {"strike": REQUIRED, "eps": 0.1}, "eps log(1 + e^{(x-K)/eps})"),
    "linear": RegistryEntry("linear", lambda location: ConvexTestFn.linear(), {}, "x (flat control)"),
}


def build_convex(block: Any, location: str = "phi") -> ConvexTestFn:
    return _build(CONVEX_FUNCTIONS, block, "convex test function", location)


def build_barrier_kind(value: Any, location: str) -> BarrierKind:
    try:
        return BarrierKind(value)
    except ValueError:
        known = ", ".join(k.value for k in BarrierKind)
        raise ConfigError(f"unknown barrier kind {value!r}; known: {known}", location) from None


def list_registry() -> str:
    """Plain-text listing of everything an experiment config can name."""
    lines: List[str] = []

    def section(title: str, table: Dict[str, RegistryEntry]):
        lines.append(f"{title}:")
        for name in sorted(table):
            entry = table[name]
            mono = f" [{entry.monotonicity}]" if entry.monotonicity else ""
            desc = f"  {entry.description}" if entry.description else ""
            lines.append(f"  {name}({entry.schema_text()}){mono}{desc}")
        lines.append("")

    section("processes", PROCESSES)
    section("functionals", FUNCTIONALS)
    section("convex test functions", CONVEX_FUNCTIONS)
    section("weight measures", MEASURES)
    section("jump laws", JUMP_LAWS)
    lines.append("barrier kinds:")
    for kind in BarrierKind:
        lines.append(f"  {kind.value}  Call_{kind.value} {kind.bound_side} Call * P(event)")
    lines.append("")
    lines.append(f"scalar maps: {', '.join(sorted(fn.SCALAR_MAPS))}")
    return "\n".join(lines) + "\n"
