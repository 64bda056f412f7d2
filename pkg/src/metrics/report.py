"""
Report Rendering
Flat JSON-lines and aligned text tables for metric reports
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Union

import pandas as pd

from .agentic import AgenticReport
from .state_control import StateControlReport

Report = Union[StateControlReport, AgenticReport]

DISPLAY_NAMES = {
    'o_tmr': 'O-TMR', 'o_amr': 'O-AMR', 'p_tmr': 'P-TMR', 'p_amr': 'P-AMR',
    'p_fnr': 'P-FNR', 'n_amr': 'N-AMR', 'n_fptr': 'N-FPTR', 'n_fpr': 'N-FPR',
    'tmr': 'TMR', 'amr': 'AMR', 'tsr': 'TSR', 'gmr': 'GMR',
}


def _clean(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def report_to_dict(report: Report) -> Dict[str, Any]:
    """Flat key -> value mapping: metrics first, then integer counts"""
    flat: Dict[str, Any] = {'report': type(report).__name__}
    flat.update({name: _clean(value) for name, value in report.metrics().items()})
    if isinstance(report, AgenticReport):
        flat['step_count'] = report.step_count
        flat['trajectory_count'] = report.trajectory_count
        flat['click_step_count'] = report.click_step_count
    flat.update({f"count.{key}": value for key, value in report.counts.items()})
    return flat


def report_to_json_lines(report: Report) -> str:
    """One {"key", "value"} object per line"""
    return '\n'.join(
        json.dumps({'key': key, 'value': value}, sort_keys=True)
        for key, value in report_to_dict(report).items()
    ) + '\n'


def read_json_lines_report(path: Union[str, Path]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if line.strip():
                row = json.loads(line)
                flat[row['key']] = row['value']
    return flat


def _percent(value: Any) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return 'n/a'
    return f"{value * 100:.2f}"


def report_to_table(report: Report) -> str:
    """Aligned two-column table, rates shown as percentages"""
    flat = report_to_dict(report)
    rows = [(DISPLAY_NAMES[name], _percent(flat[name])) for name in report.METRICS]
    rows += [(key, str(value)) for key, value in flat.items()
             if key not in report.METRICS and key != 'report']
    df = pd.DataFrame(rows, columns=['Metric', 'Value'])
    return df.to_string(index=False)


def render_report(report: Report, fmt: str = 'table') -> str:
    if fmt == 'json-lines':
        return report_to_json_lines(report)
    if fmt == 'table':
        return report_to_table(report) + '\n'
    raise ValueError(f"Unknown report format '{fmt}'")


def compare_reports(reports: Mapping[str, Mapping[str, Any]]) -> str:
    """
    Side-by-side table of several flat reports (one row per run)

    Args:
        reports: run name -> flat report as produced by report_to_dict
    """
    columns = [key for key in DISPLAY_NAMES
               if any(key in flat for flat in reports.values())]
    df = pd.DataFrame(
        [[_percent(flat.get(key)) for key in columns] for flat in reports.values()],
        index=list(reports.keys()),
        columns=[DISPLAY_NAMES[key] for key in columns],
    )
    return df.to_string()


def _compact(value: float) -> str:
    return f"{round(value, 2):g}"


def format_suite_rate(total_success: float, n_tasks: int) -> str:
    """
    Success rate with the tally of successful tasks, e.g. ``55_{11/20}``

    Args:
        total_success: sum of per-task success ratios (may be fractional)
        n_tasks: number of tasks run
    """
    if n_tasks <= 0:
        raise ValueError("format_suite_rate needs at least one task")
    rate = total_success / n_tasks * 100
    return f"{_compact(rate)}_{{{_compact(total_success)}/{n_tasks}}}"


def write_report(report: Report, output_dir: Path, stem: str) -> Iterable[Path]:
    """Write the machine-readable report and its summary table"""
    output_dir.mkdir(parents=True, exist_ok=True)
    jsonl_path = output_dir / f"{stem}.jsonl"
    jsonl_path.write_text(report_to_json_lines(report), encoding='utf-8')
    table_path = output_dir / f"{stem}.txt"
    table_path.write_text(report_to_table(report) + '\n', encoding='utf-8')
    return [jsonl_path, table_path]
