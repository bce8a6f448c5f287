import os
import yaml
from typing import Any, Dict, Iterable, Optional, Tuple
from .errors import ConfigError, ParameterError
from .lattice.grid import TorusGrid
from .ensembles.coefficients import EnsembleSpec, DEFAULT_LAMBDA, DEFAULT_P
from .elliptic.solver import SolverConfig
from .experiments.spec import ExperimentSpec

SECTIONS = ('experiment', 'grid', 'ensemble', 'solver', 'ladder', 'options', 'output', 'logging')
REQUIRED_KEYS = (
    'experiment.name',
    'experiment.samples',
    'experiment.master_seed',
    'grid.d',
    'grid.L',
    'ensemble.kind',
)
# Sections whose keys are fixed; ladder and options are free-form per experiment.
KNOWN_KEYS = {
    'experiment': {'name', 'samples', 'master_seed'},
    'grid': {'d', 'L'},
    'ensemble': {'kind', 'lambda', 'p', 'block_size'},
    'solver': {'rel_tolerance', 'max_iterations', 'preconditioner'},
    'output': {'dir', 'workers'},
    'logging': {'level'},
}
WORKERS_ENV = 'HOMOG_WORKERS'
DEFAULT_OUTPUT_DIR = 'runs'


class Config:
    """
    One experiment run read from YAML.

    Every key's line number is indexed so errors point into the file as
    '<path>:<line>: message'.
    """

    def __init__(self, config_path: str, overrides: Optional[Iterable[str]] = None):
        self.config_path = config_path
        self._data, self._lines = self._load_config()
        for item in overrides or ():
            self.apply_override(item)
        self.validate()

    def _load_config(self) -> Tuple[Dict[str, Any], Dict[str, int]]:
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            text = f.read()
        try:
            node = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            line = mark.line + 1 if mark is not None else 1
            problem = getattr(e, 'problem', None) or str(e)
            raise ConfigError(f"{self.config_path}:{line}: malformed YAML: {problem}")
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_path}:1: top level must be a mapping of sections")
        return data, self._index_lines(node)

    @staticmethod
    def _index_lines(node, prefix: str = '') -> Dict[str, int]:
        lines: Dict[str, int] = {}
        if not isinstance(node, yaml.MappingNode):
            return lines
        for key_node, value_node in node.value:
            key = f"{prefix}{key_node.value}"
            lines[key] = key_node.start_mark.line + 1
            lines.update(Config._index_lines(value_node, key + '.'))
        return lines

    def line_of(self, dotted: str) -> int:
        while dotted:
            if dotted in self._lines:
                return self._lines[dotted]
            dotted = dotted.rpartition('.')[0]
        return 1

    def error(self, dotted: str, message: str) -> ConfigError:
        return ConfigError(f"{self.config_path}:{self.line_of(dotted)}: {message}")

    def apply_override(self, item: str) -> None:
        """Apply 'section.key=value'; the value is parsed as a YAML scalar or list."""
        dotted, sep, raw = item.partition('=')
        section, dot, key = dotted.strip().partition('.')
        if not sep or not dot or not key:
            raise ConfigError(f"{self.config_path}:0: override '{item}' is not of the form section.key=value")
        if section not in SECTIONS:
            raise ConfigError(f"{self.config_path}:0: override '{item}' names unknown section '{section}'")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"{self.config_path}:0: override '{item}' has an unparsable value")
        block = self._data.setdefault(section, {}) or {}
        self._data[section] = block
        block[key] = value

    def validate(self) -> None:
        for section, block in self._data.items():
            if section not in SECTIONS:
                raise self.error(section, f"unknown section '{section}', expected one of {SECTIONS}")
            if block is not None and not isinstance(block, dict):
                raise self.error(section, f"section '{section}' must be a mapping")
            allowed = KNOWN_KEYS.get(section)
            for key in (block or {}):
                if allowed is not None and key not in allowed:
                    raise self.error(f"{section}.{key}", f"unknown key '{section}.{key}'")
        for dotted in REQUIRED_KEYS:
            section, key = dotted.split('.')
            if (self._data.get(section) or {}).get(key) is None:
                raise self.error(dotted, f"missing required key '{dotted}'")

    def get(self, key: str, default: Any = None) -> Any:
        return self._data.get(key, default)

    def _section(self, name: str) -> Dict[str, Any]:
        return self._data.get(name) or {}

    @property
    def experiment(self) -> Dict[str, Any]:
        return self._section('experiment')

    @property
    def grid(self) -> Dict[str, Any]:
        return self._section('grid')

    @property
    def ensemble(self) -> Dict[str, Any]:
        return self._section('ensemble')

    @property
    def solver(self) -> Dict[str, Any]:
        return self._section('solver')

    @property
    def ladder(self) -> Dict[str, Any]:
        return self._section('ladder')

    @property
    def options(self) -> Dict[str, Any]:
        return self._section('options')

    @property
    def output(self) -> Dict[str, Any]:
        return self._section('output')

    @property
    def logging(self) -> Dict[str, Any]:
        return self._section('logging')

    @property
    def output_dir(self) -> str:
        return str(self.output.get('dir', DEFAULT_OUTPUT_DIR))

    @property
    def workers(self) -> int:
        raw = self.output.get('workers', os.environ.get(WORKERS_ENV, 1))
        try:
            workers = int(raw)
        except (TypeError, ValueError):
            raise self.error('output.workers', f"workers must be an integer, got {raw!r}")
        if workers < 1:
            raise self.error('output.workers', f"workers must be >= 1, got {workers}")
        return workers

    @property
    def log_level(self) -> str:
        return str(self.logging.get('level', 'INFO')).upper()

    def _integer(self, dotted: str) -> int:
        section, key = dotted.split('.')
        raw = self._section(section).get(key)
        if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
            raise self.error(dotted, f"'{dotted}' must be an integer, got {raw!r}")
        return int(raw)

    def build_experiment_spec(self) -> ExperimentSpec:
        """
        Raises:
            ConfigError: anchored at the offending key for any invalid value.
        """
        try:
            grid = TorusGrid(self._integer('grid.d'), self._integer('grid.L'))
        except ParameterError as e:
            raise self.error('grid.L', str(e))

        ens = self.ensemble
        try:
            block = ens.get('block_size')
            ensemble = EnsembleSpec(
                kind=str(ens['kind']),
                lam=float(ens.get('lambda', DEFAULT_LAMBDA)),
                p=float(ens.get('p', DEFAULT_P)),
                block_size=None if block is None else int(block),
            )
            ensemble.validate(grid)
        except (ParameterError, TypeError, ValueError) as e:
            raise self.error('ensemble', f"invalid ensemble: {e}")

        try:
            solver = SolverConfig(**self.solver)
        except (ParameterError, TypeError) as e:
            raise self.error('solver', f"invalid solver settings: {e}")

        spec = ExperimentSpec(
            name=str(self.experiment['name']),
            ensemble=ensemble,
            grid=grid,
            n_samples=self._integer('experiment.samples'),
            master_seed=self._integer('experiment.master_seed'),
            solver=solver,
            ladder=dict(self.ladder),
            options=dict(self.options),
        )
        try:
            spec.validate()
        except (ParameterError, KeyError, TypeError) as e:
            raise self.error('experiment.name', f"invalid experiment: {e}")
        return spec


def load_config(path: str = "config/default.yaml", overrides: Optional[Iterable[str]] = None) -> Config:
    return Config(path, overrides)
