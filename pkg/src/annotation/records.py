"""
Annotation Records
Screen records, annotator verdicts and retained toggle quadruplets
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from src.actions import BBox, normalize_bbox


class ToggleState(str, Enum):
    ON = 'on'
    OFF = 'off'

    @property
    def opposite(self) -> 'ToggleState':
        return ToggleState.OFF if self is ToggleState.ON else ToggleState.ON


BoxKey = Tuple[str, Tuple[int, int, int, int]]


def box_key(screen_id: str, box: BBox) -> BoxKey:
    return screen_id, tuple(box.to_list())


def _load_boxes(values: List[List[float]], units: str, dims: Tuple[int, int]) -> List[BBox]:
    if units == 'px':
        return [normalize_bbox(v, dims) for v in values]
    if units != 'norm':
        raise ValueError(f"box_units must be 'norm' or 'px', got '{units}'")
    return [BBox.from_list(v) for v in values]


@dataclass
class ScreenRecord:
    """One screenshot with its original (b_o) and parsed (b_p) widget boxes"""
    screen_id: str
    image_ref: str
    screen_dims: Tuple[int, int]
    original_boxes: List[BBox] = field(default_factory=list)
    parsed_boxes: List[BBox] = field(default_factory=list)
    source_dataset: str = ''
    source_instruction: str = ''

    def __post_init__(self):
        if not self.screen_id:
            raise ValueError("ScreenRecord needs a screen_id")
        width, height = self.screen_dims
        if width <= 0 or height <= 0:
            raise ValueError(f"Screen {self.screen_id} has invalid dims {self.screen_dims}")
        self.screen_dims = (int(width), int(height))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ScreenRecord':
        """
        Build a record from a JSONL row

        Boxes are normalized [0, 1000] coordinates unless the row sets
        ``"box_units": "px"``, in which case they are normalized against
        ``screen_dims`` on load.
        """
        dims = tuple(data['screen_dims'])
        units = data.get('box_units', 'norm')
        return cls(
            screen_id=str(data['screen_id']),
            image_ref=data.get('image_ref', ''),
            screen_dims=dims,
            original_boxes=_load_boxes(data.get('original_boxes', []), units, dims),
            parsed_boxes=_load_boxes(data.get('parsed_boxes', []), units, dims),
            source_dataset=data.get('source_dataset', ''),
            source_instruction=data.get('source_instruction', ''),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'screen_id': self.screen_id,
            'image_ref': self.image_ref,
            'screen_dims': list(self.screen_dims),
            'original_boxes': [b.to_list() for b in self.original_boxes],
            'parsed_boxes': [b.to_list() for b in self.parsed_boxes],
            'source_dataset': self.source_dataset,
            'source_instruction': self.source_instruction,
        }


@dataclass(frozen=True)
class AnnotatorVerdict:
    annotator_id: str
    is_toggle: bool
    state: Optional[ToggleState] = None
    feature: Optional[str] = None
    raw_response: str = ''

    def __post_init__(self):
        if self.state is not None:
            object.__setattr__(self, 'state', ToggleState(self.state))
        if not self.is_toggle and (self.state is not None or self.feature is not None):
            raise ValueError("state/feature only apply to boxes identified as toggles")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'annotator_id': self.annotator_id,
            'is_toggle': self.is_toggle,
            'state': self.state.value if self.state else None,
            'feature': self.feature,
            'raw_response': self.raw_response,
        }


@dataclass(frozen=True)
class ToggleQuadruplet:
    """Retained annotation: screen, toggle box, current state and feature"""
    screen_id: str
    box: BBox
    state: ToggleState
    feature: str
    image_ref: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'state', ToggleState(self.state))

    @property
    def key(self) -> BoxKey:
        return box_key(self.screen_id, self.box)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'screen_id': self.screen_id,
            'box': self.box.to_list(),
            'state': self.state.value,
            'feature': self.feature,
            'image_ref': self.image_ref,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ToggleQuadruplet':
        return cls(
            screen_id=str(data['screen_id']),
            box=BBox.from_list(data['box']),
            state=ToggleState(data['state']),
            feature=data['feature'],
            image_ref=data.get('image_ref', ''),
        )
