"""
Benchmark Builder
Expands toggle quadruplets into positive/negative samples and splits them
"""

import hashlib
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
import yaml

from src.actions import Action, ActionType, BBox
from src.annotation import ToggleQuadruplet, ToggleState
from src.matching import GroundTruthStep
from src.metrics import Polarity

logger = logging.getLogger(__name__)

TEMPLATES_PATH = Path(__file__).parent / 'templates.yaml'


def quadruplet_key(screen_id: str, box: BBox) -> str:
    return f"{screen_id}|{','.join(str(v) for v in box.to_list())}"


def _digest(text: str, algo: str = 'sha256') -> str:
    return hashlib.new(algo, text.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class Sample:
    """One instruction with its label action on a toggle screen"""
    sample_id: str
    screen_id: str
    polarity: Polarity
    instruction: str
    label_action: Action
    toggle_box: BBox
    toggle_state: ToggleState
    feature: str
    image_ref: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'polarity', Polarity(self.polarity))
        object.__setattr__(self, 'toggle_state', ToggleState(self.toggle_state))
        if self.polarity == Polarity.POSITIVE:
            if self.label_action.type != ActionType.CLICK or self.label_action.point != self.toggle_box.center:
                raise ValueError(f"Positive sample {self.sample_id} must CLICK the toggle center")
        elif self.label_action.type != ActionType.COMPLETED:
            raise ValueError(f"Negative sample {self.sample_id} must be labelled COMPLETED")

    @property
    def key(self) -> str:
        return quadruplet_key(self.screen_id, self.toggle_box)

    @property
    def desired_state(self) -> ToggleState:
        """State the instruction asks for"""
        if self.polarity == Polarity.POSITIVE:
            return self.toggle_state.opposite
        return self.toggle_state

    def ground_truth(self) -> GroundTruthStep:
        return GroundTruthStep(self.label_action, (self.toggle_box,))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sample_id': self.sample_id,
            'screen_id': self.screen_id,
            'polarity': self.polarity.value,
            'instruction': self.instruction,
            'label_action': self.label_action.to_dict(),
            'toggle_box': self.toggle_box.to_list(),
            'toggle_state': self.toggle_state.value,
            'feature': self.feature,
            'image_ref': self.image_ref,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Sample':
        return cls(
            sample_id=data['sample_id'],
            screen_id=str(data['screen_id']),
            polarity=Polarity(data['polarity']),
            instruction=data['instruction'],
            label_action=Action.from_dict(data['label_action']),
            toggle_box=BBox.from_list(data['toggle_box']),
            toggle_state=ToggleState(data['toggle_state']),
            feature=data['feature'],
            image_ref=data.get('image_ref', ''),
        )


class InstructionTemplates:
    """Instruction phrasing per desired state, with optional paraphrases"""

    def __init__(self, templates_path: Union[str, Path, None] = None):
        path = Path(templates_path) if templates_path else TEMPLATES_PATH
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}

        self.default: Dict[str, str] = data.get('default', {})
        self.paraphrases: Dict[str, List[str]] = data.get('paraphrases', {})
        for state in ToggleState:
            if state.value not in self.default:
                raise ValueError(f"Template file {path} has no default for '{state.value}'")
            for template in [self.default[state.value]] + self.paraphrases.get(state.value, []):
                if '{feature}' not in template:
                    raise ValueError(f"Template '{template}' has no {{feature}} slot")

    def render(self, desired: ToggleState, feature: str, key: str = '',
               paraphrase: bool = False, seed: int = 0) -> str:
        options = self.paraphrases.get(desired.value) if paraphrase else None
        if not options:
            return self.default[desired.value].format(feature=feature)
        index = int(_digest(f"{seed}|{key}|{desired.value}"), 16) % len(options)
        return options[index].format(feature=feature)


def sample_id_for(screen_id: str, box: BBox, polarity: Polarity) -> str:
    return _digest(f"{quadruplet_key(screen_id, box)}|{polarity.value}", 'sha1')[:16]


def expand_quadruplet(q: ToggleQuadruplet, templates: Optional[InstructionTemplates] = None,
                      paraphrase: bool = False, seed: int = 0) -> Tuple[Sample, Sample]:
    """
    Expand one quadruplet into its (positive, negative) sample pair

    The positive instruction asks for the opposite of the current state and is
    labelled CLICK at the toggle center; the negative asks for the current
    state and is labelled COMPLETED.
    """
    feature = q.feature.strip()
    if not feature:
        raise ValueError(f"Quadruplet {q.screen_id} {q.box.to_list()} has an empty feature")
    templates = templates or _default_templates()
    key = quadruplet_key(q.screen_id, q.box)
    common = dict(screen_id=q.screen_id, toggle_box=q.box, toggle_state=q.state,
                  feature=feature, image_ref=q.image_ref)

    center = q.box.center
    positive = Sample(
        sample_id=sample_id_for(q.screen_id, q.box, Polarity.POSITIVE),
        polarity=Polarity.POSITIVE,
        instruction=templates.render(q.state.opposite, feature, key, paraphrase, seed),
        label_action=Action.click(center.x, center.y),
        **common,
    )
    negative = Sample(
        sample_id=sample_id_for(q.screen_id, q.box, Polarity.NEGATIVE),
        polarity=Polarity.NEGATIVE,
        instruction=templates.render(q.state, feature, key, paraphrase, seed),
        label_action=Action.completed(),
        **common,
    )
    return positive, negative


_TEMPLATES: Optional[InstructionTemplates] = None


def _default_templates() -> InstructionTemplates:
    global _TEMPLATES
    if _TEMPLATES is None:
        _TEMPLATES = InstructionTemplates()
    return _TEMPLATES


def expand_all(quadruplets: Iterable[ToggleQuadruplet], templates: Optional[InstructionTemplates] = None,
               paraphrase: bool = False, seed: int = 0) -> List[Sample]:
    samples: List[Sample] = []
    for q in quadruplets:
        samples.extend(expand_quadruplet(q, templates, paraphrase, seed))
    return samples


@dataclass(frozen=True)
class SplitManifest:
    """Seeded train/test assignment of screen ids"""
    seed: int
    ratio: float
    train_ids: FrozenSet[str]
    test_ids: FrozenSet[str]

    def __post_init__(self):
        if self.train_ids & self.test_ids:
            raise ValueError("Train and test screens overlap")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'ratio': self.ratio,
            'train_ids': sorted(self.train_ids),
            'test_ids': sorted(self.test_ids),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SplitManifest':
        return cls(int(data['seed']), float(data['ratio']),
                   frozenset(data['train_ids']), frozenset(data['test_ids']))


def _check_pairs(samples: Sequence[Sample]) -> Dict[str, str]:
    """Quadruplet key -> screen id, once every quadruplet is known to have both polarities"""
    groups: Dict[str, List[Polarity]] = defaultdict(list)
    screens: Dict[str, str] = {}
    for s in samples:
        groups[s.key].append(s.polarity)
        screens[s.key] = s.screen_id
    for key, polarities in groups.items():
        if sorted(p.value for p in polarities) != ['negative', 'positive']:
            raise ValueError(f"Quadruplet {key} does not have exactly one positive and one negative sample")
    return screens


def split_dataset(samples: Sequence[Sample], seed: int = 0, ratio: float = 0.9) -> SplitManifest:
    """
    Deterministic split at screen granularity

    Screen ids are ordered by a seeded SHA-256 hash. Whole screens go to train
    while that brings the train side closer to round(ratio * n) quadruplets,
    so every toggle of a screen (and both samples of each toggle) share a
    split. With one toggle per screen the quadruplet count is exact.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"Split ratio must be in (0, 1), got {ratio}")

    toggles_per_screen = Counter(_check_pairs(samples).values())
    ordered = sorted(toggles_per_screen, key=lambda sid: (_digest(f"{seed}:{sid}"), sid))
    target = int(round(ratio * sum(toggles_per_screen.values())))

    n_screens = taken = 0
    for screen_id in ordered:
        size = toggles_per_screen[screen_id]
        if taken + size - target >= target - taken:
            break
        taken += size
        n_screens += 1

    manifest = SplitManifest(seed, ratio, frozenset(ordered[:n_screens]), frozenset(ordered[n_screens:]))
    logger.info("Split %d screens into %d train / %d test (%d / %d quadruplets)",
                len(ordered), n_screens, len(ordered) - n_screens,
                taken, sum(toggles_per_screen.values()) - taken)
    return manifest


def apply_split(samples: Sequence[Sample], manifest: SplitManifest) -> Tuple[List[Sample], List[Sample]]:
    train, test = [], []
    for s in samples:
        if s.screen_id in manifest.train_ids:
            train.append(s)
        elif s.screen_id in manifest.test_ids:
            test.append(s)
        else:
            raise ValueError(f"Sample {s.sample_id} (screen {s.screen_id}) is not covered by the split manifest")
    return train, test


def dataset_stats(samples: Sequence[Sample], top_n: int = 10) -> Dict[str, Any]:
    """Polarity and state balance plus the most frequent features"""
    if not samples:
        return {'samples': 0, 'positive': 0, 'negative': 0, 'state_on': 0, 'state_off': 0, 'top_features': {}}
    df = pd.DataFrame([{'polarity': s.polarity.value, 'state': s.toggle_state.value,
                        'feature': s.feature} for s in samples])
    polarity = df['polarity'].value_counts()
    # each quadruplet contributes two samples with the same state
    state = df['state'].value_counts() // 2
    return {
        'samples': len(df),
        'positive': int(polarity.get('positive', 0)),
        'negative': int(polarity.get('negative', 0)),
        'state_on': int(state.get('on', 0)),
        'state_off': int(state.get('off', 0)),
        'top_features': {k: int(v) // 2 for k, v in df['feature'].value_counts().head(top_n).items()},
    }


def build_benchmark(quadruplets: Iterable[ToggleQuadruplet], seed: int = 0, ratio: float = 0.9,
                    templates: Optional[InstructionTemplates] = None,
                    paraphrase: bool = False) -> Tuple[List[Sample], SplitManifest]:
    samples = expand_all(quadruplets, templates, paraphrase, seed)
    return samples, split_dataset(samples, seed, ratio)
