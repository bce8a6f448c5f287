import hashlib
import json
import math
from typing import Any, Optional

import numpy as np


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return 'inf' if obj > 0 else '-inf'
    return obj


def canonical_json(obj: Any, indent: Optional[int] = None) -> str:
    """Sorted-key JSON, whitespace-free unless indented; inf is spelled as a string."""
    separators = (',', ':') if indent is None else (',', ': ')
    return json.dumps(_plain(obj), sort_keys=True, indent=indent, separators=separators)


def stable_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()


def short_hash(obj: Any, length: int = 12) -> str:
    return stable_hash(obj)[:length]
