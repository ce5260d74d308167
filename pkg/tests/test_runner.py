import pytest

from comonotone_mc.config import Settings
from comonotone_mc.errors import ConfigError
from comonotone_mc.inputs.experiment_config import ExperimentConfig
from comonotone_mc.runner import CONTROL_PREFIX, RunResult, run_experiment

SETTINGS = Settings(bootstrap_resamples=50, factorization_restarts=3, factorization_max_iter=500)


def _run(data):
    return run_experiment(ExperimentConfig.from_dict(data), SETTINGS)


def test_negative_control_inverts_the_exit_status():
    config = ExperimentConfig.from_dict({"kind": "pitt", "seed": 1})
    ok = RunResult(config, rows=[{"name": "a", "verdict": "consistent"},
                                 {"name": CONTROL_PREFIX + "b", "verdict": "violation"}])
    assert ok.exit_code == 0
    silent_control = RunResult(config, rows=[{"name": CONTROL_PREFIX + "b", "verdict": "consistent"}])
    assert silent_control.exit_code == 2
    violated = RunResult(config, rows=[{"name": "a", "verdict": "violation"}])
    assert violated.failures == violated.rows
    assert violated.summary() == {"consistent": 0, "violation": 1, "inconclusive": 0}


def test_barrier_experiment_rows():
    result = _run({"kind": "barrier", "seed": 11, "n_paths": 5000, "grid": {"horizon": 1.0, "n_steps": 64},
                   "process": {"name": "gbm", "s0": 100.0, "vol": 0.2},
                   "barrier": {"strike": 100.0, "level": 90.0, "up_level": 110.0}})
    names = [row["name"] for row in result.rows]
    assert len(names) == 5
    assert sum(name.startswith("bound:") for name in names) == 4
    assert names[-1] == "parity:barrier+partner-vanilla"
    assert "bound:up_in(K=100,L=110)>=call*P" in names
    assert result.exit_code == 0
    assert len(result.curves) == 4 * 3


def test_barrier_ladder_row():
    result = _run({"kind": "barrier", "seed": 11, "n_paths": 2000, "grid": {"horizon": 1.0, "n_steps": 32},
                   "process": {"name": "gbm"},
                   "barrier": {"strike": 100.0, "level": 90.0, "kinds": ["down_in"],
                               "ladder": {"kind": "down_out", "levels": [80, 90, 95]}}})
    assert result.rows[-1]["name"] == "ladder:down_out(K=100):non_increasing"
    assert result.rows[-1]["verdict"] == "consistent"


def test_comonotony_experiment_with_control():
    result = _run({"kind": "comonotony", "seed": 5, "n_paths": 5000, "grid": {"horizon": 1.0, "n_steps": 16},
                   "comonotony": {
                       "cases": [{"label": "bm", "process": "brownian_motion"},
                                 {"label": "fbm", "process": {"name": "fbm", "H": 0.75}}],
                       "functionals": ["terminal", "running_max", {"name": "negate", "of": "running_min"}],
                       "negative_control": {"rho": -0.5},
                       "running_extrema": {"level": 1.0, "x_list": [0.0, 1.0]}}})
    controls = [row for row in result.rows if row["name"].startswith(CONTROL_PREFIX)]
    assert len(controls) == 1
    assert controls[0]["verdict"] == "violation"
    assert sum(row["name"].startswith("bm:") and "~" in row["name"] for row in result.rows) == 6
    assert sum("extrema" in row["name"] for row in result.rows) == 2
    assert result.exit_code == 0


def test_comonotony_bad_pair_is_a_config_error():
    with pytest.raises(ConfigError):
        _run({"kind": "comonotony", "seed": 5, "n_paths": 500, "process": "brownian_motion",
              "comonotony": {"functionals": ["terminal"], "pairs": [[0, 3]]}})


def test_simulate_experiment_rows():
    result = _run({"kind": "simulate", "seed": 3, "n_paths": 20000, "grid": {"horizon": 1.0, "n_steps": 4},
                   "process": "brownian_bridge", "simulate": {"z_threshold": 5.0}})
    assert len(result.rows) == 5 * 6 // 2
    assert result.rows[0]["predicted"] == "==0"
    assert result.exit_code == 0
    assert {row["curve"] for row in result.curves} == {"brownian_bridge:variance", "brownian_bridge:variance_oracle"}


def test_truncation_deficit_only_for_series():
    with pytest.raises(ConfigError):
        _run({"kind": "simulate", "seed": 3, "n_paths": 100, "process": "brownian_motion",
              "simulate": {"truncation_deficit": True}})


def test_antithetic_experiment_rows():
    result = _run({"kind": "antithetic", "seed": 9, "n_paths": 5000, "grid": {"horizon": 1.0, "n_steps": 16},
                   "process": "brownian_motion",
                   "antithetic": {"functionals": [{"functional": "terminal", "expect_ratio": [0.0, 0.0]},
                                                  {"functional": {"name": "compose", "map": "square",
                                                                  "of": "terminal"},
                                                   "expect_ratio": [0.95, 1.05]},
                                                  "running_max"]}})
    assert len(result.rows) == 6
    ratios = [row for row in result.rows if row["name"].endswith("variance_ratio")]
    assert [row["predicted"] for row in ratios] == ["in[0,0]", "in[0.95,1.05]", "<=0.5"]
    assert result.exit_code == 0


def test_peacock_experiment_rows():
    result = _run({"kind": "peacock", "seed": 2, "n_paths": 5000, "grid": {"horizon": 1.0, "n_steps": 16},
                   "peacock": {"curves": [
                       {"type": "carr", "phi": "linear", "t_grid": [0.25, 0.5, 1.0], "control": "flat",
                        "reference": 1.0, "label": "carr_linear"},
                       {"type": "vega", "phi": {"name": "call_part", "strike": 1.0}, "sigma": 0.2,
                        "n_samples": 200000, "closed_form_tolerance": 0.02}]}})
    names = [row["name"] for row in result.rows]
    assert "carr_linear:level[0.25]" in names
    assert "vega[call_part(1),sigma=0.2]:closed_form" in names
    assert result.exit_code == 0
    assert {row["curve"] for row in result.curves} == {"carr_linear"}


def test_peacock_curve_without_process_is_a_config_error():
    with pytest.raises(ConfigError) as err:
        _run({"kind": "peacock", "seed": 2, "peacock": {"curves": [
            {"type": "centered", "phi": "square", "t_grid": [0.5]}]}})
    assert err.value.location == "peacock.curves[0].process"


def test_pitt_rank_one_witness():
    result = _run({"kind": "pitt", "seed": 4, "pitt": {"matrix": [[1, 2, 1], [2, 4, 2], [1, 2, 1]],
                                                       "tol": 1e-12, "expect": "witness"}})
    names = [row["name"] for row in result.rows]
    assert names == ["pitt_check[matrix]", "numerical_rank[matrix]", "factorization[matrix]:witness found"]
    assert result.rows[1]["mean"] == 1.0
    assert result.exit_code == 0


def test_pitt_with_negative_matrix_downgrades_statistical_rows():
    result = _run({"kind": "pitt", "seed": 4, "n_paths": 2000,
                   "pitt": {"matrix": [[1.0, -0.3], [-0.3, 1.0]], "rank": 2, "statistical": {"maps": ["identity"]}}})
    assert result.rows[0]["verdict"] == "inconclusive"
    assert result.rows[-1]["verdict"] == "inconclusive"
    assert result.rows[-1]["predicted"] == "none"


def test_pitt_statistical_rows_cover_map_pairs_and_random_matrices():
    result = _run({"kind": "pitt", "seed": 6, "n_paths": 2000,
                   "pitt": {"matrix": [[1.0, 0.2, 0.1], [0.2, 1.0, 0.3], [0.1, 0.3, 1.0]], "rank": 3,
                            "statistical": {"maps": ["identity", "cube"], "random_matrices": 2}}})
    names = [row["name"] for row in result.rows[3:]]
    assert len(names) == 3 * 4 * 3
    assert "gaussian_vector[matrix]:identity(coordinate(0))~cube(coordinate(2))" in names
    assert "gaussian_vector[matrix]:cube(coordinate(0))~identity(coordinate(1))" in names
    assert sum(name.startswith("gaussian_vector[random1]:") for name in names) == 12
    assert all(row["predicted"] == ">=0" for row in result.rows[3:])
    assert result.exit_code == 0


def test_pitt_statistical_rejects_bad_random_matrix_options():
    with pytest.raises(ConfigError) as err:
        _run({"kind": "pitt", "seed": 6, "pitt": {"statistical": {"random_matrices": 1, "dimension": 1}}})
    assert err.value.location == "pitt.statistical.dimension"


def test_processes_pick_up_quadrature_settings():
    from comonotone_mc.runner import _Context
    config = ExperimentConfig.from_dict({"kind": "pitt", "seed": 1})
    ctx = _Context(config, Settings(fbm_tail_factor=20.0, quad_factor=8), 4.0, 1, 4096)
    fbm = ctx.process({"name": "fbm", "H": 0.3, "method": "mvn"})
    assert (fbm.tail_factor, fbm.quad_factor) == (20.0, 8)
    assert ctx.process("brownian_motion").name == "brownian_motion"
