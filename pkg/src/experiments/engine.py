import logging
import os
import time
from typing import Dict, Optional, Type
from ..errors import ParameterError
from ..reporting.summary import ReportWriter
from .base import Experiment
from .spec import ExperimentSpec, ExperimentReport
from .scheduler import schedule, execute, CheckpointStore
from .elliptic_experiments import CltDecay, SystematicError, CorrectorGrowth, MinimalRadius
from .parabolic_experiments import SemigroupDecay, CommutatorGaussianity, PropagatorError
from .two_scale import TwoScaleExpansion

logger = logging.getLogger(__name__)

REGISTRY: Dict[str, Type[Experiment]] = {
  cls.name: cls for cls in (
    CltDecay,
    SystematicError,
    SemigroupDecay,
    CorrectorGrowth,
    CommutatorGaussianity,
    TwoScaleExpansion,
    PropagatorError,
    MinimalRadius,
  )
}


def run_directory(output_dir: str, spec: ExperimentSpec) -> str:
  return os.path.join(output_dir, f"{spec.name}-{spec.spec_hash()}")


class ExperimentEngine:
  def __init__(self, spec: ExperimentSpec, workers: int = 1, output_dir: Optional[str] = None):
    spec.validate()
    if workers < 1:
      raise ParameterError(f"workers must be >= 1, got {workers}")
    self.spec = spec
    self.workers = workers
    self.output_dir = output_dir
    self.experiment = REGISTRY[spec.name](spec)

  @property
  def run_dir(self) -> Optional[str]:
    return run_directory(self.output_dir, self.spec) if self.output_dir else None

  def run(self) -> ExperimentReport:
    spec = self.spec
    logger.info(f"Starting {spec.name}: d={spec.grid.d}, L={spec.grid.L}, N={spec.n_samples}, "
                f"ensemble={spec.ensemble.kind}, workers={self.workers}")
    start = time.perf_counter()

    # 1. Shared references (deterministic, parent process only)
    self.experiment.prepare()

    # 2. Samples, resuming from checkpoints
    indices = list(range(spec.n_samples))
    checkpoint_dir = os.path.join(self.run_dir, 'samples') if self.run_dir else None
    done = CheckpointStore(checkpoint_dir).completed(indices) if checkpoint_dir else {}
    plan = schedule([i for i in indices if i not in done], self.workers)
    fresh = execute(plan, self.experiment.run_sample, checkpoint_dir)
    results = sorted({**done, **fresh}.items())
    logger.info(f"{spec.name}: {len(fresh)} samples computed, {len(done)} resumed")

    # 3. Reduction in index order
    report = self.experiment.reduce(results)
    report.seeds = self.experiment.seed_manifest(indices + self.experiment.reference_indices())
    report.wall_clock = time.perf_counter() - start

    if self.run_dir:
      ReportWriter(self.run_dir).write(report)
    logger.info(f"{spec.name} finished in {report.wall_clock:.1f}s with status {report.status}")
    return report


def run_experiment(spec: ExperimentSpec, workers: int = 1, output_dir: Optional[str] = None) -> ExperimentReport:
  return ExperimentEngine(spec, workers, output_dir).run()
