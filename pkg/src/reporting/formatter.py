import pandas as pd
from typing import Any, Dict


def _fmt(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_checks(report: Dict[str, Any]) -> pd.DataFrame:
    """
    One row per check of a report.json dict, with the fitted slope error
    where the check is a rate fit.
    """
    fits = report.get('fits', {})
    rows = []
    for check in report.get('checks', []):
        fit = fits.get(check['name'], {})
        rows.append({
            "check": check['name'],
            "value": _fmt(check.get('value')),
            "target": _fmt(check.get('target')),
            "tolerance": _fmt(check.get('tolerance')),
            "stderr": _fmt(fit.get('slope_stderr')),
            "result": 'pass' if check['passed'] else 'FAIL',
        })
    return pd.DataFrame(rows, columns=['check', 'value', 'target', 'tolerance', 'stderr', 'result'])


def format_header(report: Dict[str, Any]) -> str:
    spec = report.get('spec', {})
    grid = spec.get('grid', {})
    ensemble = spec.get('ensemble', {})
    return (f"{spec.get('name', '?')}: d={grid.get('d')}, L={grid.get('L')}, "
            f"N={spec.get('n_samples')}, ensemble={ensemble.get('kind')} -> {report.get('status', '?')}")
