"""
Per-channel CSV blocks.

Schema homog-csv v1: two comment lines (schema tag, channel name) followed
by a header and one row per rung with columns parameter, estimate, stderr, N.
"""
import io
import logging
import pandas as pd
from typing import Any, Dict, List, Tuple
from ..errors import ParameterError

logger = logging.getLogger(__name__)

SCHEMA = 'homog-csv v1'
COLUMNS = ['parameter', 'estimate', 'stderr', 'N']


def channel_frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=COLUMNS)
    df['N'] = df['N'].astype(int)
    return df


def csv_block(channel: str, rows: List[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# {SCHEMA}\n# channel: {channel}\n")
    channel_frame(rows).to_csv(buffer, index=False)
    return buffer.getvalue()


def write_csv_block(path: str, channel: str, rows: List[Dict[str, Any]]) -> None:
    with open(path, 'w') as f:
        f.write(csv_block(channel, rows))
    logger.debug(f"Wrote {len(rows)} rows of {channel} to {path}")


def read_csv_block(path: str) -> Tuple[str, pd.DataFrame]:
    with open(path) as f:
        schema = f.readline().strip()
        channel_line = f.readline().strip()
    if schema != f"# {SCHEMA}":
        raise ParameterError(f"{path}: expected schema '{SCHEMA}', found '{schema}'")
    channel = channel_line.split(':', 1)[1].strip() if ':' in channel_line else ''
    df = pd.read_csv(path, comment='#')
    if list(df.columns) != COLUMNS:
        raise ParameterError(f"{path}: unexpected columns {list(df.columns)}")
    return channel, df
