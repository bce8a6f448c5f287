"""
Deterministic sample scheduling.

Sample seeds depend on (master_seed, index) only. Work is split into
contiguous chunks, run through joblib, and merged back in index order, so
the reduced report does not depend on the worker count.
"""
import json
import logging
import os
import numpy as np
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
from joblib import Parallel, delayed
from ..errors import ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorkPlan:
    indices: Tuple[int, ...]
    chunks: Tuple[Tuple[int, ...], ...]
    workers: int


def schedule(indices: Sequence[int], workers: int) -> WorkPlan:
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    ordered = tuple(sorted(int(i) for i in indices))
    if len(set(ordered)) != len(ordered):
        raise ParameterError("Duplicate sample indices")
    if not ordered:
        return WorkPlan((), (), workers)
    parts = np.array_split(np.array(ordered), min(workers, len(ordered)))
    chunks = tuple(tuple(int(i) for i in part) for part in parts if part.size)
    return WorkPlan(ordered, chunks, workers)


def normalize(result: Any) -> Any:
    """JSON round trip, so fresh and checkpointed results are indistinguishable."""
    return json.loads(json.dumps(result))


def _run_chunk(fn: Callable[[int], Dict[str, Any]], chunk: Sequence[int],
               checkpoint_dir: Optional[str] = None) -> List[Tuple[int, Dict[str, Any]]]:
    store = CheckpointStore(checkpoint_dir) if checkpoint_dir else None
    out = []
    for i in chunk:
        result = normalize(fn(i))
        if store is not None:
            store.save(i, result)
        out.append((i, result))
    return out


def execute(plan: WorkPlan, fn: Callable[[int], Dict[str, Any]],
            checkpoint_dir: Optional[str] = None) -> Dict[int, Dict[str, Any]]:
    """Run fn on every planned index; results keyed by index and checkpointed as they finish."""
    if not plan.chunks:
        return {}
    if plan.workers == 1 or len(plan.chunks) == 1:
        batches = [_run_chunk(fn, chunk, checkpoint_dir) for chunk in plan.chunks]
    else:
        batches = Parallel(n_jobs=plan.workers)(delayed(_run_chunk)(fn, chunk, checkpoint_dir) for chunk in plan.chunks)
    results = {}
    for batch in batches:
        for index, result in batch:
            results[index] = result
    return dict(sorted(results.items()))


class CheckpointStore:
    """One JSON file per finished sample under <directory>."""

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)

    def path(self, index: int) -> str:
        return os.path.join(self.directory, f"sample_{index:08d}.json")

    def has(self, index: int) -> bool:
        return os.path.exists(self.path(index))

    def save(self, index: int, result: Dict[str, Any]) -> None:
        tmp = self.path(index) + '.tmp'
        with open(tmp, 'w') as f:
            json.dump(result, f, sort_keys=True)
        os.replace(tmp, self.path(index))

    def load(self, index: int) -> Optional[Dict[str, Any]]:
        if not self.has(index):
            return None
        with open(self.path(index)) as f:
            return json.load(f)

    def completed(self, indices: Sequence[int]) -> Dict[int, Dict[str, Any]]:
        done = {}
        for i in indices:
            result = self.load(i)
            if result is not None:
                done[i] = result
        if done:
            logger.info(f"Resuming: {len(done)} of {len(indices)} samples found in {self.directory}")
        return done
