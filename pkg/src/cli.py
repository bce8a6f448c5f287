"""
Command implementations behind run.py.

Exit codes: 0 when an experiment passes (or passes degenerately), 2 when it
ran but a statistical check failed, 1 on any operational error.
"""
import logging
import math
import os
import sys
import numpy as np
from dataclasses import dataclass
from typing import Iterable, Optional
from .config import load_config, Config
from .errors import ConfigError, ParameterError, ConvergenceError, ConsistencyError
from .lattice.grid import TorusGrid
from .lattice.io import read_field, write_values
from .ensembles.coefficients import EnsembleSpec
from .ensembles.sampler import sample
from .elliptic.solver import SolverConfig
from .elliptic.corrector import assemble_extended_corrector
from .elliptic.bundle import save_corrector_bundle
from .experiments.spec import ExperimentSpec
from .experiments.engine import run_experiment, run_directory
from .reporting.csv_blocks import csv_block
from .reporting.formatter import format_checks, format_header
from .reporting.summary import load_report
from .utils.hashing import short_hash

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

OPERATIONAL_ERRORS = (ConfigError, ParameterError, OSError, ConvergenceError, ConsistencyError)


@dataclass(frozen=True)
class RunConfig:
  experiment: ExperimentSpec
  output_dir: str
  workers: int
  log_level: str = 'INFO'

  @classmethod
  def from_config(cls, config: Config, workers: Optional[int] = None,
                  output_dir: Optional[str] = None, log_level: Optional[str] = None) -> 'RunConfig':
    workers = config.workers if workers is None else workers
    if workers < 1:
      raise ParameterError(f"workers must be >= 1, got {workers}")
    return cls(
      experiment=config.build_experiment_spec(),
      output_dir=output_dir or config.output_dir,
      workers=workers,
      log_level=(log_level or config.log_level).upper(),
    )

  def check_output_dir(self) -> None:
    os.makedirs(self.output_dir, exist_ok=True)
    if not os.access(self.output_dir, os.W_OK):
      raise PermissionError(f"Output directory is not writable: {self.output_dir}")


def _fail(e: Exception) -> int:
  logger.error(f"{type(e).__name__}: {e}")
  print(f"error: {e}", file=sys.stderr)
  return EXIT_ERROR


def cmd_run(config_path: str, overrides: Iterable[str] = (), workers: Optional[int] = None,
            output_dir: Optional[str] = None, log_level: Optional[str] = None) -> int:
  try:
    run_config = RunConfig.from_config(load_config(config_path, overrides), workers, output_dir, log_level)
    logging.getLogger().setLevel(run_config.log_level)
    run_config.check_output_dir()
    report = run_experiment(run_config.experiment, run_config.workers, run_config.output_dir)
  except OPERATIONAL_ERRORS as e:
    return _fail(e)

  content = report.to_dict()
  print(f"\n{format_header(content)}")
  table = format_checks(content)
  if not table.empty:
    print(table.to_string(index=False))
  print(f"Artifacts: {run_directory(run_config.output_dir, run_config.experiment)}")
  return EXIT_OK if report.passed else EXIT_FAIL


def _parse_cutoff(T) -> float:
  T = float(T)
  if not (T > 0 or math.isinf(T)):
    raise ParameterError(f"Cutoff T must be positive, got {T}")
  return T


def cmd_corrector(out_dir: str, d: int, L: int, T, seed: int, index: int = 0, direction: int = 0,
                  kind: str = 'bernoulli', lam: float = 0.25, p: float = 0.5,
                  block_size: Optional[int] = None, rel_tolerance: float = 1e-9) -> int:
  """Sample one realization, assemble its extended corrector and write the bundle."""
  try:
    grid = TorusGrid(d, L)
    ensemble = EnsembleSpec(kind=kind, lam=lam, p=p, block_size=block_size)
    ensemble.validate(grid)
    cutoff = _parse_cutoff(T)
    a = sample(ensemble, grid, seed, index)
    corrector = assemble_extended_corrector(a, cutoff, direction, SolverConfig(rel_tolerance=rel_tolerance))
    save_corrector_bundle(out_dir, corrector, seed=seed, index=index,
                          ensemble_hash=short_hash(ensemble.to_dict()))
  except OPERATIONAL_ERRORS as e:
    return _fail(e)
  print(f"Helmholtz identity residual: {corrector.helmholtz_residual:.3e}")
  print(f"a_hT column {direction}: {[round(float(v), 10) for v in corrector.a_hT_column]}")
  print(f"Bundle written to {out_dir}")
  return EXIT_OK


def cmd_report(run_dir: str, csv: bool = False) -> int:
  try:
    report = load_report(run_dir)
  except (OSError, ValueError) as e:
    return _fail(e)

  if csv:
    for channel, rows in sorted(report.get('channels', {}).items()):
      sys.stdout.write(csv_block(channel, rows))
    return EXIT_OK

  print(format_header(report))
  table = format_checks(report)
  print(table.to_string(index=False) if not table.empty else "(no checks)")
  for name, fit in sorted(report.get('fits', {}).items()):
    print(f"{name}: slope {fit['slope']:.4f} +/- {fit['slope_stderr']:.4f} (R^2 {fit['r_squared']:.4f})")
  if report.get('failures'):
    print(f"{len(report['failures'])} solver failures recorded")
  return EXIT_OK


def cmd_dump_field(path: str, inspect: bool = False, d: int = 2, L: int = 32, seed: int = 0, index: int = 0,
                   kind: str = 'bernoulli', lam: float = 0.25, p: float = 0.5,
                   block_size: Optional[int] = None) -> int:
  """Write one sampled conductance field to `path`, or with inspect=True summarize an existing file."""
  try:
    if inspect:
      header, values = read_field(path, kind='raw')
      print(f"{path}: d={header.d}, L={header.L}, components={header.components}")
      for c in range(header.components):
        comp = values[c]
        print(f"  component {c}: min {comp.min():.6g}, max {comp.max():.6g}, "
              f"mean {comp.mean():.6g}, std {comp.std():.6g}")
      return EXIT_OK
    grid = TorusGrid(d, L)
    ensemble = EnsembleSpec(kind=kind, lam=lam, p=p, block_size=block_size)
    ensemble.validate(grid)
    a = sample(ensemble, grid, seed, index)
    write_values(path, grid, a.conductances)
  except OPERATIONAL_ERRORS as e:
    return _fail(e)
  print(f"Coefficient field ({ensemble.kind}, seed {seed}, index {index}) written to {path}; "
        f"mean conductance {float(np.mean(a.conductances)):.6g}")
  return EXIT_OK
