from .spec import ExperimentSpec, ExperimentReport, Check, EXPERIMENT_NAMES, default_ladder
from .scheduler import WorkPlan, schedule, execute, CheckpointStore
from .engine import ExperimentEngine, REGISTRY, run_experiment, run_directory
