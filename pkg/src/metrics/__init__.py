"""
Metrics package
"""

from .state_control import (
    UNDEFINED,
    Polarity,
    ScoredSample,
    StateControlReport,
    count_state_control,
    eval_state_control,
)
from .agentic import AgenticReport, ScoredStep, ScoredTrajectory, eval_agentic
from .report import (
    compare_reports,
    format_suite_rate,
    read_json_lines_report,
    render_report,
    report_to_dict,
    report_to_json_lines,
    report_to_table,
    write_report,
)
from .scoring import score_episodes, score_samples

__all__ = [
    'UNDEFINED',
    'Polarity',
    'ScoredSample',
    'StateControlReport',
    'count_state_control',
    'eval_state_control',
    'AgenticReport',
    'ScoredStep',
    'ScoredTrajectory',
    'eval_agentic',
    'compare_reports',
    'format_suite_rate',
    'read_json_lines_report',
    'render_report',
    'report_to_dict',
    'report_to_json_lines',
    'report_to_table',
    'write_report',
    'score_episodes',
    'score_samples',
]
