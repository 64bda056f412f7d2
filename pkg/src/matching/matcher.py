"""
Action Matcher
Step-level exact action matching with bbox hit-testing and distance thresholds
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from nltk.stem import PorterStemmer

from src.actions import SCALE, Action, ActionType, BBox, Point
from src.errors import ConfigError

# Click thresholds as a fraction of the screen
PRESETS: Dict[str, float] = {
    'state-control': 0.04,
    'agentic': 0.14,
}


def _euclidean(dx: float, dy: float) -> float:
    return math.sqrt(dx * dx + dy * dy)


def _chebyshev(dx: float, dy: float) -> float:
    return max(abs(dx), abs(dy))


DISTANCE_METRICS: Dict[str, Callable[[float, float], float]] = {
    'euclidean': _euclidean,
    'chebyshev': _chebyshev,
}

_STEMMERS = {
    'porter': PorterStemmer,
}


class MatchReason(str, Enum):
    TYPE_MISMATCH = 'TYPE_MISMATCH'
    BBOX_HIT = 'BBOX_HIT'
    DISTANCE_PASS = 'DISTANCE_PASS'
    DISTANCE_FAIL = 'DISTANCE_FAIL'
    PARAM_MISMATCH = 'PARAM_MISMATCH'
    PARAM_PASS = 'PARAM_PASS'


@dataclass(frozen=True)
class MatchConfig:
    """Click threshold and the measures used to compare parameters"""
    click_threshold: float = PRESETS['state-control']
    distance_metric: str = 'euclidean'
    stemmer: str = 'porter'

    def __post_init__(self):
        if not 0 < self.click_threshold < 1:
            raise ValueError(f"click_threshold must be in (0, 1), got {self.click_threshold}")
        if self.distance_metric not in DISTANCE_METRICS:
            raise ValueError(f"Unknown distance metric '{self.distance_metric}'")
        if self.stemmer not in _STEMMERS:
            raise ValueError(f"Unknown stemmer '{self.stemmer}'")

    @classmethod
    def preset(cls, name: str, **kwargs) -> 'MatchConfig':
        if name not in PRESETS:
            raise ConfigError(f"Unknown threshold preset '{name}'. Available: {', '.join(PRESETS)}")
        return cls(click_threshold=PRESETS[name], **kwargs)

    @classmethod
    def from_threshold(cls, value, **kwargs) -> 'MatchConfig':
        """Accept either a preset name or a float threshold"""
        if isinstance(value, str) and value in PRESETS:
            return cls.preset(value, **kwargs)
        try:
            threshold = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"Click threshold must be a number or one of {list(PRESETS)}, got {value!r}")
        return cls(click_threshold=threshold, **kwargs)


@dataclass(frozen=True)
class MatchResult:
    type_match: bool
    exact_match: bool
    reason: MatchReason

    def __post_init__(self):
        if self.exact_match and not self.type_match:
            raise ValueError("exact_match requires type_match")


@dataclass(frozen=True)
class GroundTruthStep:
    """Ground-truth action with the widget layout of its (normalized) screen"""
    action: Action
    layout: Tuple[BBox, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'layout', tuple(self.layout))


def relative_distance(a: Point, b: Point, metric: str = 'euclidean') -> float:
    """Distance between two points as a fraction of the screen"""
    return DISTANCE_METRICS[metric]((a.x - b.x) / SCALE, (a.y - b.y) / SCALE)


def within_threshold(a: Point, b: Point, cfg: MatchConfig) -> bool:
    """Strict distance test done in integer screen units to keep boundaries exact"""
    limit = round(cfg.click_threshold * SCALE, 9)
    dx, dy = abs(a.x - b.x), abs(a.y - b.y)
    if cfg.distance_metric == 'chebyshev':
        return max(dx, dy) < limit
    return dx * dx + dy * dy < limit * limit


def containing_box(point: Point, layout: Sequence[BBox]) -> Optional[BBox]:
    """Smallest-area layout box containing the point (first one on ties)"""
    best = None
    for box in layout:
        if box.contains(point) and (best is None or box.area < best.area):
            best = box
    return best


def click_match(gt_point: Point, layout: Sequence[BBox], pred_point: Optional[Point],
                cfg: MatchConfig) -> MatchResult:
    """
    Grounding check for a CLICK whose type already matches

    A prediction inside the box holding the ground truth is a hit; otherwise the
    relative distance must be strictly below the threshold.
    """
    if pred_point is None:
        return MatchResult(True, False, MatchReason.PARAM_MISMATCH)

    box = containing_box(gt_point, layout)
    if box is not None and box.contains(pred_point):
        return MatchResult(True, True, MatchReason.BBOX_HIT)

    if within_threshold(gt_point, pred_point, cfg):
        return MatchResult(True, True, MatchReason.DISTANCE_PASS)
    return MatchResult(True, False, MatchReason.DISTANCE_FAIL)


def type_text_match(gt_text: str, pred_text: str) -> bool:
    """Case-insensitive equality after trimming the ends"""
    return gt_text.lower().strip() == pred_text.lower().strip()


@lru_cache(maxsize=4096)
def _normalize_app_name(name: str, stemmer: str = 'porter') -> str:
    stem = _stemmer(stemmer).stem
    return ' '.join(stem(token) for token in name.lower().split())


@lru_cache(maxsize=None)
def _stemmer(name: str):
    return _STEMMERS[name]()


def openapp_match(gt_name: str, pred_name: str, stemmer: str = 'porter') -> bool:
    """Stemmed app names match when either is a substring of the other"""
    gt = _normalize_app_name(gt_name, stemmer)
    pred = _normalize_app_name(pred_name, stemmer)
    if not gt or not pred:
        return False
    return gt in pred or pred in gt


def match_step(gt: GroundTruthStep, pred: Action, cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Score one predicted action against the ground-truth step"""
    expected = gt.action
    if pred.type != expected.type:
        return MatchResult(False, False, MatchReason.TYPE_MISMATCH)

    t = expected.type
    if t == ActionType.CLICK:
        return click_match(expected.point, gt.layout, pred.point, cfg)
    if t == ActionType.SCROLL:
        ok = pred.direction is not None and pred.direction == expected.direction
    elif t == ActionType.TYPE:
        ok = pred.text is not None and type_text_match(expected.text, pred.text)
    elif t == ActionType.OPENAPP:
        ok = pred.app_name is not None and openapp_match(expected.app_name, pred.app_name, cfg.stemmer)
    else:
        # PRESS, COMPLETED and OTHER carry no parameters
        ok = True
    return MatchResult(True, ok, MatchReason.PARAM_PASS if ok else MatchReason.PARAM_MISMATCH)


def match_steps(pairs: Sequence[Tuple[GroundTruthStep, Action]], cfg: MatchConfig = MatchConfig(),
                n_jobs: int = 1) -> List[MatchResult]:
    """Match many (ground truth, prediction) pairs, optionally in parallel"""
    if n_jobs == 1:
        return [match_step(gt, pred, cfg) for gt, pred in pairs]
    return Parallel(n_jobs=n_jobs, batch_size=256)(
        delayed(match_step)(gt, pred, cfg) for gt, pred in pairs
    )
