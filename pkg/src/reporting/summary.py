import json
import os
import logging
from typing import Any, Dict, TYPE_CHECKING
from ..utils.hashing import canonical_json
from .csv_blocks import write_csv_block
from .formatter import format_checks, format_header

if TYPE_CHECKING:
    from ..experiments.spec import ExperimentReport

logger = logging.getLogger(__name__)

REPORT_FILE = 'report.json'
TIMING_FILE = 'timing.json'
SEEDS_FILE = 'seeds.json'
SUMMARY_FILE = 'summary.md'


class ReportWriter:
    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        if not os.path.exists(out_dir):
            os.makedirs(out_dir)

    def _write_json(self, name: str, payload: Any) -> str:
        path = os.path.join(self.out_dir, name)
        with open(path, 'w') as f:
            f.write(canonical_json(payload, indent=2))
            f.write("\n")
        return path

    def write(self, report: 'ExperimentReport') -> Dict[str, str]:
        """
        Writes report.json, timing.json, seeds.json, one CSV per channel and
        a Markdown summary. Returns the written paths by role.
        """
        content = report.to_dict()
        name = content['spec']['name']
        logger.info(f"Writing artifacts for {name} to {self.out_dir}...")

        paths = {
            'report': self._write_json(REPORT_FILE, content),
            'timing': self._write_json(TIMING_FILE, {'wall_clock_seconds': report.wall_clock}),
            'seeds': self._write_json(SEEDS_FILE, report.seeds),
        }
        for channel, rows in sorted(report.channels.items()):
            path = os.path.join(self.out_dir, f"{channel}.csv")
            write_csv_block(path, channel, rows)
            paths[f"csv:{channel}"] = path

        md_path = os.path.join(self.out_dir, SUMMARY_FILE)
        table = format_checks(content)
        with open(md_path, 'w') as f:
            f.write(f"# Experiment Summary: {name}\n\n")
            f.write(f"{format_header(content)}\n\n")
            f.write("## Checks\n\n")
            f.write("| Check | Value | Target | Tolerance | Slope stderr | Result |\n")
            f.write("|---|---|---|---|---|---|\n")
            for _, r in table.iterrows():
                f.write(f"| {r['check']} | {r['value']} | {r['target']} | {r['tolerance']} | {r['stderr']} | {r['result']} |\n")
            if report.failures:
                f.write("\n## Solver failures\n\n")
                for failure in report.failures:
                    f.write(f"- sample {failure['index']}, rung {failure['rung']}: {failure['error']}\n")
            f.write(f"\nWall clock: {report.wall_clock:.1f} s\n")
        paths['summary'] = md_path

        logger.info(f"Report saved to {paths['report']}")
        return paths


def load_report(run_dir: str) -> Dict[str, Any]:
    path = os.path.join(run_dir, REPORT_FILE)
    if not os.path.exists(path):
        raise FileNotFoundError(f"No {REPORT_FILE} in {run_dir}")
    with open(path) as f:
        return json.load(f)
