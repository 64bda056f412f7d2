"""
Matching package
"""

from .matcher import (
    DISTANCE_METRICS,
    PRESETS,
    GroundTruthStep,
    MatchConfig,
    MatchReason,
    MatchResult,
    click_match,
    containing_box,
    match_step,
    match_steps,
    openapp_match,
    relative_distance,
    type_text_match,
    within_threshold,
)

__all__ = [
    'DISTANCE_METRICS',
    'PRESETS',
    'GroundTruthStep',
    'MatchConfig',
    'MatchReason',
    'MatchResult',
    'click_match',
    'containing_box',
    'match_step',
    'match_steps',
    'openapp_match',
    'relative_distance',
    'type_text_match',
    'within_threshold',
]
