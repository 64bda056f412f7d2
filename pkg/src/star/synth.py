"""
State-Aware Reasoning Synthesis
Perceive / analyze / decide chains for toggle samples and agentic episode steps
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import yaml
from joblib import Parallel, delayed

from src.actions import Action, ActionType
from src.annotation import ToggleState
from src.data import Episode, Sample

logger = logging.getLogger(__name__)

TEMPLATES_PATH = Path(__file__).parent / 'templates.yaml'


class ChainTemplates:
    """Sentence templates for each reasoning step"""

    REQUIRED = ('perceive', 'analyze', 'decide', 'render', 'system')

    def __init__(self, templates_path: Union[str, Path, None] = None):
        path = Path(templates_path) if templates_path else TEMPLATES_PATH
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
        missing = [k for k in self.REQUIRED if k not in data]
        if missing:
            raise ValueError(f"Reasoning template file {path} is missing: {', '.join(missing)}")
        if not {'click', 'completed'} <= set(data['decide']):
            raise ValueError(f"Reasoning template file {path} needs decide.click and decide.completed")
        self.perceive: str = data['perceive']
        self.analyze: str = data['analyze']
        self.decide: Dict[str, str] = data['decide']
        self.render: str = data['render']
        self.system: str = data['system']


_DEFAULT: Optional[ChainTemplates] = None


def default_templates() -> ChainTemplates:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = ChainTemplates()
    return _DEFAULT


@dataclass(frozen=True)
class StarChain:
    """Three-step reasoning ending in the action it justifies"""
    perceive: str
    analyze: str
    decide: str
    final_action: Action
    current_state: ToggleState
    desired_state: ToggleState
    feature: str

    def __post_init__(self):
        expected = ActionType.CLICK if self.current_state != self.desired_state else ActionType.COMPLETED
        if self.final_action.type != expected:
            raise ValueError(f"Chain for '{self.feature}' ({self.current_state.value} -> "
                             f"{self.desired_state.value}) must end in {expected.value}, "
                             f"got {self.final_action.type.value}")

    def render(self, templates: Optional[ChainTemplates] = None) -> str:
        templates = templates or default_templates()
        return templates.render.format(perceive=self.perceive, analyze=self.analyze, decide=self.decide)


def build_chain(feature: str, current: ToggleState, desired: ToggleState, final_action: Action,
                templates: Optional[ChainTemplates] = None) -> StarChain:
    templates = templates or default_templates()
    slots = dict(feature=feature, current=current.value, desired=desired.value)
    verdict = 'click' if current != desired else 'completed'
    return StarChain(
        perceive=templates.perceive.format(**slots),
        analyze=templates.analyze.format(**slots),
        decide=templates.decide[verdict].format(**slots),
        final_action=final_action,
        current_state=current,
        desired_state=desired,
        feature=feature,
    )


def synth_chain(sample: Sample, templates: Optional[ChainTemplates] = None) -> StarChain:
    """Chain for a benchmark sample; its final action is the sample's label"""
    return build_chain(sample.feature, sample.toggle_state, sample.desired_state, sample.label_action, templates)


def synth_chains(samples: Sequence[Sample], templates: Optional[ChainTemplates] = None,
                 n_jobs: int = 1) -> List[StarChain]:
    if n_jobs == 1:
        return [synth_chain(s, templates) for s in samples]
    return Parallel(n_jobs=n_jobs, batch_size=512)(delayed(synth_chain)(s, templates) for s in samples)


@dataclass(frozen=True)
class ToggleAnnotation:
    """Sidecar entry declaring an episode step as a toggle step"""
    episode_id: str
    step: int
    state: Optional[ToggleState]
    feature: Optional[str]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ToggleAnnotation':
        state = data.get('state')
        return cls(
            episode_id=str(data['episode_id']),
            step=int(data['step']),
            state=ToggleState(state) if state else None,
            feature=data.get('feature') or None,
        )

    @property
    def complete(self) -> bool:
        return self.state is not None and bool(self.feature and self.feature.strip())


def group_annotations(annotations: Iterable[ToggleAnnotation]) -> Dict[str, Dict[int, ToggleAnnotation]]:
    grouped: Dict[str, Dict[int, ToggleAnnotation]] = {}
    for a in annotations:
        grouped.setdefault(a.episode_id, {})[a.step] = a
    return grouped


def desired_state_for(action: Action, current: ToggleState) -> ToggleState:
    """A toggle step that clicks wants the opposite state; one that completes wants the current one"""
    if action.type == ActionType.CLICK:
        return current.opposite
    if action.type == ActionType.COMPLETED:
        return current
    raise ValueError(f"Toggle steps must be CLICK or COMPLETED, got {action.type.value}")


def refine_episode(episode: Episode, toggle_steps: Mapping[int, ToggleAnnotation],
                   templates: Optional[ChainTemplates] = None) -> Episode:
    """
    Replace the reasoning of annotated toggle steps with rendered chains

    Steps are declared toggle steps by a sidecar annotation or by a
    ``"toggle": true`` field on the step. All other fields and steps are left
    untouched.
    """
    templates = templates or default_templates()
    step_ids = set(episode.step_ids())
    declared = set(toggle_steps) | {s.step for s in episode.steps if s.fields.get('toggle') is True}

    unknown = sorted(declared - step_ids)
    if unknown:
        raise ValueError(f"Episode {episode.episode_id} has no steps {unknown}")
    missing = sorted(i for i in declared if i not in toggle_steps or not toggle_steps[i].complete)
    if missing:
        raise ValueError(f"Episode {episode.episode_id}: toggle steps {missing} lack a state/feature annotation")
    if not declared:
        return episode

    refined = []
    for step in episode.steps:
        if step.step not in declared:
            refined.append(step)
            continue
        note = toggle_steps[step.step]
        feature = note.feature.strip()
        chain = build_chain(feature, note.state, desired_state_for(step.action, note.state), step.action, templates)
        refined.append(step.with_reasoning(chain.render(templates)))
    logger.debug("Refined %d toggle steps in episode %s", len(declared), episode.episode_id)
    return episode.with_steps(refined)
