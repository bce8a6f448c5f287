"""
ExtendedCorrector directory format.

    <dir>/phi_T.hlf  q_T.hlf  sigma_T.hlf  g_T.hlf  manifest.json

The manifest carries no timestamps, so writing the same corrector twice
produces byte-identical directories.
"""
import json
import logging
import math
import os
import numpy as np
from typing import Any, Dict, Optional, Tuple
from ..lattice.io import write_field, read_field
from ..utils.hashing import canonical_json
from ..errors import ParameterError
from .corrector import ExtendedCorrector

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = 'homog-corrector v1'
FIELD_FILES = {
    'phi_T': ('phi_T.hlf', 'scalar'),
    'q_T': ('q_T.hlf', 'vector'),
    'sigma_T': ('sigma_T.hlf', 'skew'),
    'g_T': ('g_T.hlf', 'vector'),
}


def save_corrector_bundle(directory: str, corrector: ExtendedCorrector,
                          seed: Optional[int] = None, index: Optional[int] = None,
                          ensemble_hash: Optional[str] = None,
                          extra: Optional[Dict[str, Any]] = None) -> str:
    os.makedirs(directory, exist_ok=True)
    for attr, (filename, _) in FIELD_FILES.items():
        write_field(os.path.join(directory, filename), getattr(corrector, attr))

    manifest = {
        'format': BUNDLE_FORMAT,
        'd': corrector.grid.d,
        'L': corrector.grid.L,
        'T': 'inf' if math.isinf(corrector.T) else corrector.T,
        'direction': corrector.direction,
        'a_hT_column': [float(v) for v in corrector.a_hT_column],
        'helmholtz_residual': corrector.helmholtz_residual,
        'master_seed': seed,
        'sample_index': index,
        'ensemble_hash': ensemble_hash,
        'files': {attr: filename for attr, (filename, _) in FIELD_FILES.items()},
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(directory, 'manifest.json')
    with open(path, 'w') as f:
        f.write(canonical_json(manifest, indent=2) + '\n')
    logger.info(f"Corrector bundle written to {directory}")
    return path


def load_corrector_bundle(directory: str) -> Tuple[ExtendedCorrector, Dict[str, Any]]:
    path = os.path.join(directory, 'manifest.json')
    if not os.path.exists(path):
        raise FileNotFoundError(f"No corrector manifest at {path}")
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get('format') != BUNDLE_FORMAT:
        raise ParameterError(f"Unsupported bundle format {manifest.get('format')!r}")

    fields = {attr: read_field(os.path.join(directory, filename), kind=kind)
              for attr, (filename, kind) in FIELD_FILES.items()}
    T = math.inf if manifest['T'] == 'inf' else float(manifest['T'])
    corrector = ExtendedCorrector(
        T=T,
        direction=int(manifest['direction']),
        a_hT_column=np.array(manifest['a_hT_column'], dtype=float),
        helmholtz_residual=float(manifest['helmholtz_residual']),
        **fields,
    )
    return corrector, manifest
