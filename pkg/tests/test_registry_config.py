import json

import pytest

from comonotone_mc.analysis.barrier import BarrierKind
from comonotone_mc.config import Settings, load_settings
from comonotone_mc.errors import ConfigError
from comonotone_mc.inputs.experiment_config import ExperimentConfig, load_experiment
from comonotone_mc.inputs.registry import (build_barrier_kind, build_convex, build_functional, build_measure,
                                           build_process, list_registry)
from comonotone_mc.models.functionals import Monotonicity
from comonotone_mc.processes.gaussian import FractionalBM, Liouville
from comonotone_mc.processes.pii import ExpPII, PIISpec


def test_build_process_with_defaults():
    fbm = build_process({"name": "fbm", "H": 0.75})
    assert isinstance(fbm, FractionalBM)
    assert fbm.hurst == 0.75
    assert build_process("brownian_motion").name == "brownian_motion"


def test_build_pii_with_jumps():
    spec = build_process({"name": "pii", "intensity": 2.0, "jump": {"name": "exponential", "rate": 3.0},
                          "fixed_jumps": [{"time": 0.5, "law": {"name": "constant", "value": 0.1}}]})
    assert isinstance(spec, PIISpec)
    assert spec.intensity == 2.0
    assert spec.fixed_jumps[0].time == 0.5
    assert isinstance(build_process({"name": "exp_pii", "s0": 50.0}), ExpPII)


def test_build_liouville_power_kernel():
    process = build_process({"name": "liouville", "kernel": {"name": "power", "hurst": 0.75}})
    assert isinstance(process, Liouville)
    assert process.label == "power(H=0.75)"


def test_unknown_process_names_the_location():
    with pytest.raises(ConfigError) as err:
        build_process({"name": "levy_flight"}, "comonotony.cases[2].process")
    assert err.value.location == "comonotony.cases[2].process.name"


def test_unknown_key_names_the_location():
    with pytest.raises(ConfigError) as err:
        build_process({"name": "fbm", "H": 0.3, "hurst": 0.3})
    assert err.value.location == "process.hurst"


def test_invalid_parameter_becomes_config_error():
    with pytest.raises(ConfigError) as err:
        build_process({"name": "fbm", "H": 1.5})
    assert err.value.location == "process"


def test_missing_required_key():
    with pytest.raises(ConfigError) as err:
        build_functional({"name": "call_payoff"}, "f")
    assert err.value.location == "f.strike"


def test_nested_functionals():
    f = build_functional({"name": "compose", "map": "exp", "of": {"name": "negate", "of": "running_max"}})
    assert f.name == "exp(negation(running_max))"
    assert f.monotonicity is Monotonicity.NON_INCREASING
    with pytest.raises(ConfigError):
        build_functional({"name": "compose", "map": "sine", "of": "terminal"})


def test_measures_convex_and_kinds():
    assert build_measure({"name": "dirac", "t": 0.5}).label == "dirac(0.5)"
    assert build_convex({"name": "call_part", "strike": 1.0}).name == "call_part(1)"
    assert build_barrier_kind("up_in", "barrier.kinds[0]") is BarrierKind.UP_IN
    with pytest.raises(ConfigError):
        build_barrier_kind("sideways", "barrier.kinds[0]")


def test_list_registry_names_everything():
    text = list_registry()
    assert "brownian_motion" in text
    assert "fbm(H=0.5" in text
    for kind in BarrierKind:
        assert kind.value in text
    assert "call_part" in text


def _experiment(**overrides):
    data = {"kind": "barrier", "seed": 7, "process": {"name": "gbm"},
            "barrier": {"strike": 100.0, "level": 90.0}}
    data.update(overrides)
    return data


def test_experiment_defaults():
    config = ExperimentConfig.from_dict(_experiment())
    assert config.n_paths == 100000
    assert config.grid.n_steps == 256
    assert config.name == "barrier"
    assert config.to_dict()["barrier"]["strike"] == 100.0


def test_experiment_requires_seed():
    data = _experiment()
    del data["seed"]
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(data)
    assert err.value.location == "seed"


def test_experiment_rejects_unknown_keys():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(_experiment(paths=10))
    assert err.value.location == "paths"
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(_experiment(barrier={"strike": 1.0, "lvl": 2.0}))
    assert err.value.location == "barrier.lvl"


def test_experiment_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_experiment(kind="quantum"))


def test_experiment_needs_process():
    data = _experiment()
    del data["process"]
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)
    assert ExperimentConfig.from_dict({"kind": "pitt", "seed": 1}).process is None


@pytest.mark.parametrize("n_paths", [1, 2.5, "many", True])
def test_experiment_rejects_bad_path_counts(n_paths):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_experiment(n_paths=n_paths))


def test_overrides_win():
    config = ExperimentConfig.from_dict(_experiment(n_paths=500))
    changed = config.with_overrides(n_paths=200, seed=3, output="out", workers=2)
    assert (changed.n_paths, changed.seed, changed.output, changed.workers) == (200, 3, "out", 2)
    assert config.with_overrides() == config


def test_load_experiment_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_experiment(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_experiment(str(bad))


def test_checked_in_experiments_load(experiments_dir):
    files = sorted(experiments_dir.glob("*.json"))
    assert files
    for path in files:
        config = load_experiment(str(path))
        assert config.name == path.stem


def test_settings_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"lab_settings": {"z_threshold": 5.0, "workers": 3, "colour": "red"}}))
    settings = load_settings(str(path))
    assert settings.z_threshold == 5.0
    assert settings.workers == 3
    assert settings.chunk_size == Settings().chunk_size
    assert load_settings(str(tmp_path / "none.json")) == Settings()


def test_settings_overrides():
    settings = Settings().with_overrides(workers=4, z_threshold=None)
    assert settings.workers == 4
    assert settings.z_threshold == 4.0
    assert settings.to_dict()["workers"] == 4
