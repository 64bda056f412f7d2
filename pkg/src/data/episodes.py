"""
Episode Records
Agentic episodes as ordered steps, keeping every original JSON field
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.actions import Action, BBox
from src.matching import GroundTruthStep


@dataclass(frozen=True)
class EpisodeStep:
    """
    One ground-truth step of an episode

    ``fields`` holds the step's JSON object as read, so writing it back only
    changes what was explicitly replaced.
    """
    step: int
    action: Action
    layout: Tuple[BBox, ...] = ()
    image_ref: str = ''
    reasoning: Optional[str] = None
    fields: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], index: int) -> 'EpisodeStep':
        return cls(
            step=int(data.get('step', index)),
            action=Action.from_dict(data['action']),
            layout=tuple(BBox.from_list(b) for b in data.get('layout', [])),
            image_ref=data.get('image_ref', ''),
            reasoning=data.get('reasoning'),
            fields=dict(data),
        )

    def to_dict(self) -> Dict[str, Any]:
        out = dict(self.fields) if self.fields else {
            'step': self.step,
            'action': self.action.to_dict(),
            'layout': [b.to_list() for b in self.layout],
            'image_ref': self.image_ref,
        }
        if self.reasoning is not None or 'reasoning' in out:
            out['reasoning'] = self.reasoning
        return out

    def with_reasoning(self, reasoning: str) -> 'EpisodeStep':
        return replace(self, reasoning=reasoning)

    def ground_truth(self) -> GroundTruthStep:
        return GroundTruthStep(self.action, self.layout)


@dataclass(frozen=True)
class Episode:
    episode_id: str
    instruction: str
    steps: Tuple[EpisodeStep, ...]
    fields: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.steps:
            raise ValueError(f"Episode '{self.episode_id}' has no steps")
        object.__setattr__(self, 'steps', tuple(self.steps))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Episode':
        steps = [EpisodeStep.from_dict(s, i) for i, s in enumerate(data.get('steps', []))]
        return cls(
            episode_id=str(data['episode_id']),
            instruction=data.get('instruction', ''),
            steps=tuple(steps),
            fields=dict(data),
        )

    def to_dict(self) -> Dict[str, Any]:
        out = dict(self.fields) if self.fields else {
            'episode_id': self.episode_id,
            'instruction': self.instruction,
        }
        out['steps'] = [s.to_dict() for s in self.steps]
        return out

    def with_steps(self, steps: Sequence[EpisodeStep]) -> 'Episode':
        return replace(self, steps=tuple(steps))

    def step_ids(self) -> List[int]:
        return [s.step for s in self.steps]
