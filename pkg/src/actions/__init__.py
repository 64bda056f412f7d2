"""
Actions package
"""

from .types import (
    SCALE,
    Action,
    ActionType,
    BBox,
    ClampWarning,
    Direction,
    Point,
    normalize_bbox,
    normalize_point,
)
from .dialects import (
    Dialect,
    format_action,
    get_dialect,
    list_dialects,
    parse_action,
    parse_or_other,
    register_dialect,
)

__all__ = [
    'SCALE',
    'Action',
    'ActionType',
    'BBox',
    'ClampWarning',
    'Direction',
    'Point',
    'normalize_bbox',
    'normalize_point',
    'Dialect',
    'format_action',
    'get_dialect',
    'list_dialects',
    'parse_action',
    'parse_or_other',
    'register_dialect',
]
