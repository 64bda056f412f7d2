"""
Action Model
Canonical action, point and box types plus coordinate normalization
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

# Normalized screen space is [0, SCALE] on both axes
SCALE = 1000


class ActionType(str, Enum):
    CLICK = 'CLICK'
    COMPLETED = 'COMPLETED'
    SCROLL = 'SCROLL'
    TYPE = 'TYPE'
    OPENAPP = 'OPENAPP'
    PRESS = 'PRESS'
    OTHER = 'OTHER'


class Direction(str, Enum):
    UP = 'up'
    DOWN = 'down'
    LEFT = 'left'
    RIGHT = 'right'


class ClampWarning(UserWarning):
    """A pixel coordinate fell outside the screen and was clamped"""


def _check_coord(name: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if not 0 <= value <= SCALE:
        raise ValueError(f"{name}={value} outside [0, {SCALE}]")
    return value


def _as_coord(value: Any) -> int:
    """Integer coordinate from decoded JSON; integral floats such as 500.0 are accepted"""
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"coordinate must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Point:
    """Click location in normalized [0, 1000] coordinates"""
    x: int
    y: int

    def __post_init__(self):
        _check_coord('x', self.x)
        _check_coord('y', self.y)

    def to_list(self) -> List[int]:
        return [self.x, self.y]

    @classmethod
    def from_list(cls, values: Sequence[int]) -> 'Point':
        if len(values) != 2:
            raise ValueError(f"Point needs 2 values, got {len(values)}")
        return cls(_as_coord(values[0]), _as_coord(values[1]))


@dataclass(frozen=True, order=True)
class BBox:
    """Widget bounding box in normalized [0, 1000] coordinates"""
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        for name in ('x_min', 'y_min', 'x_max', 'y_max'):
            _check_coord(name, getattr(self, name))
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"Degenerate box {self.to_list()}")

    @property
    def area(self) -> int:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def center(self) -> Point:
        return Point((self.x_min + self.x_max) // 2, (self.y_min + self.y_max) // 2)

    def contains(self, point: Point) -> bool:
        """Edge-inclusive containment"""
        return self.x_min <= point.x <= self.x_max and self.y_min <= point.y <= self.y_max

    def overlaps(self, other: 'BBox') -> bool:
        """True when the interiors intersect (shared edges do not count)"""
        return (self.x_min < other.x_max and other.x_min < self.x_max
                and self.y_min < other.y_max and other.y_min < self.y_max)

    def to_list(self) -> List[int]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, values: Sequence[int]) -> 'BBox':
        if len(values) != 4:
            raise ValueError(f"BBox needs 4 values, got {len(values)}")
        return cls(*(_as_coord(v) for v in values))


# Parameter slot each action type requires
REQUIRED_SLOT = {
    ActionType.CLICK: 'point',
    ActionType.SCROLL: 'direction',
    ActionType.TYPE: 'text',
    ActionType.OPENAPP: 'app_name',
}

_SLOTS = ('point', 'direction', 'text', 'app_name')


@dataclass(frozen=True)
class Action:
    """
    Canonical agent action

    Exactly the parameter slot required by ``type`` is populated. ``raw`` keeps
    the original agent output and does not take part in equality.
    """
    type: ActionType
    point: Optional[Point] = None
    direction: Optional[Direction] = None
    text: Optional[str] = None
    app_name: Optional[str] = None
    raw: str = field(default='', compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'type', ActionType(self.type))
        if self.direction is not None:
            object.__setattr__(self, 'direction', Direction(self.direction))

        required = REQUIRED_SLOT.get(self.type)
        for slot in _SLOTS:
            present = getattr(self, slot) is not None
            if slot == required and not present:
                raise ValueError(f"{self.type.value} requires '{slot}'")
            if slot != required and present:
                raise ValueError(f"{self.type.value} does not take '{slot}'")
        for slot in ('text', 'app_name'):
            value = getattr(self, slot)
            if value is not None and not isinstance(value, str):
                raise ValueError(f"'{slot}' must be a string, got {value!r}")

    @classmethod
    def click(cls, x: int, y: int, raw: str = '') -> 'Action':
        return cls(ActionType.CLICK, point=Point(x, y), raw=raw)

    @classmethod
    def completed(cls, raw: str = '') -> 'Action':
        return cls(ActionType.COMPLETED, raw=raw)

    @classmethod
    def other(cls, raw: str) -> 'Action':
        return cls(ActionType.OTHER, raw=raw)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'type': self.type.value}
        if self.point is not None:
            data['point'] = self.point.to_list()
        if self.direction is not None:
            data['direction'] = self.direction.value
        if self.text is not None:
            data['text'] = self.text
        if self.app_name is not None:
            data['app_name'] = self.app_name
        if self.raw:
            data['raw'] = self.raw
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Action':
        point = data.get('point')
        return cls(
            type=ActionType(data['type']),
            point=Point.from_list(point) if point is not None else None,
            direction=data.get('direction'),
            text=data.get('text'),
            app_name=data.get('app_name'),
            raw=data.get('raw', ''),
        )


def _normalize_axis(value: float, extent: float) -> Tuple[int, bool]:
    scaled = math.floor(value * SCALE / extent)
    clamped = min(max(scaled, 0), SCALE)
    return clamped, clamped != scaled or not 0 <= value <= extent


def normalize_point(px: Tuple[float, float], screen_dims: Tuple[float, float]) -> Point:
    """
    Map a pixel coordinate onto the normalized [0, 1000] grid

    Args:
        px: (x, y) in pixels
        screen_dims: (width, height) in pixels

    Returns:
        Point with floor(px * 1000 / dim), clamped to [0, 1000]. A ClampWarning
        is emitted when the pixel lies outside the screen.
    """
    width, height = screen_dims
    if width <= 0 or height <= 0:
        raise ValueError(f"Screen dimensions must be positive, got {width}x{height}")

    x, x_clamped = _normalize_axis(px[0], width)
    y, y_clamped = _normalize_axis(px[1], height)
    if x_clamped or y_clamped:
        logger.warning("Pixel %s outside %sx%s screen, clamped to (%d, %d)", px, width, height, x, y)
        warnings.warn(f"pixel {tuple(px)} clamped to ({x}, {y})", ClampWarning, stacklevel=2)
    return Point(x, y)


def normalize_bbox(box: Sequence[float], screen_dims: Tuple[float, float]) -> BBox:
    """Normalize a pixel-space [x_min, y_min, x_max, y_max] box corner by corner"""
    top_left = normalize_point((box[0], box[1]), screen_dims)
    bottom_right = normalize_point((box[2], box[3]), screen_dims)
    return BBox(top_left.x, top_left.y, bottom_right.x, bottom_right.y)
