import os
import re
import pytest
from src.config import Config, load_config, WORKERS_ENV
from src.errors import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "config")

VALID = """\
experiment:
  name: "E1-clt-decay"
  samples: 30
  master_seed: 7
grid:
  d: 2
  L: 32
ensemble:
  kind: "bernoulli"
  lambda: 0.25
  p: 0.5
"""


def write(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_load_default_configs():
    spec = load_config(os.path.join(CONFIG_DIR, "test.yaml")).build_experiment_spec()
    assert spec.name == 'E1-clt-decay'
    assert spec.grid.L == 32 and spec.n_samples == 30
    assert load_config(os.path.join(CONFIG_DIR, "default.yaml")).build_experiment_spec().grid.L == 256


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        Config(os.path.join(CONFIG_DIR, "does_not_exist.yaml"))


def test_valid_config_properties(tmp_path, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    config = Config(write(tmp_path, VALID))
    assert config.workers == 1
    assert config.output_dir == 'runs'
    assert config.log_level == 'INFO'
    assert config.ensemble['lambda'] == 0.25
    spec = config.build_experiment_spec()
    assert spec.ensemble.lam == 0.25 and spec.master_seed == 7


def test_workers_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert Config(write(tmp_path, VALID)).workers == 3
    monkeypatch.setenv(WORKERS_ENV, "zero")
    with pytest.raises(ConfigError):
        Config(write(tmp_path, VALID)).workers


def test_missing_key_points_at_section(tmp_path):
    text = VALID.replace("  L: 32\n", "")
    path = write(tmp_path, text)
    with pytest.raises(ConfigError, match=re.escape(path) + r":5: missing required key 'grid.L'"):
        Config(path)


def test_unknown_key_points_at_line(tmp_path):
    path = write(tmp_path, VALID + "solver:\n  tolerance: 1.0e-9\n")
    with pytest.raises(ConfigError, match=re.escape(path) + r":13: unknown key 'solver.tolerance'"):
        Config(path)


def test_malformed_yaml(tmp_path):
    path = write(tmp_path, "experiment:\n  name: [unclosed\ngrid:\n  d: 2\n")
    with pytest.raises(ConfigError, match="malformed YAML"):
        Config(path)


def test_invalid_value_is_anchored(tmp_path):
    path = write(tmp_path, VALID.replace("L: 32", "L: 48"))
    with pytest.raises(ConfigError, match=re.escape(path) + ":7:"):
        Config(path).build_experiment_spec()
    path = write(tmp_path, VALID.replace("p: 0.5", "p: 1.5"), "bad_p.yaml")
    with pytest.raises(ConfigError, match="invalid ensemble"):
        Config(path).build_experiment_spec()


def test_overrides(tmp_path):
    config = Config(write(tmp_path, VALID), ["grid.L=64", "options.slope_tolerance=0.2", "ladder.T=16"])
    spec = config.build_experiment_spec()
    assert spec.grid.L == 64
    assert spec.option('slope_tolerance') == 0.2
    assert spec.resolved_ladder['T'] == 16
    with pytest.raises(ConfigError, match=":0:"):
        Config(write(tmp_path, VALID), ["grid.L"])
    with pytest.raises(ConfigError, match=":0:"):
        Config(write(tmp_path, VALID), ["nosuch.key=1"])
