"""
Annotator Prompts
Prompt templates loaded from text assets and constrained verdict parsing
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from src.actions import BBox
from .records import ScreenRecord, ToggleState

PROMPTS_DIR = Path(__file__).parent / 'prompts'

STAGE_IDENTIFY = 'identify'
STAGE_STATE_FEATURE = 'state_feature'

DEFAULT_PATTERNS = {
    'identify': r'(?i)answer\s*:\s*(yes|no)\b',
    'state': r'(?i)state\s*:\s*(on|off)\b',
    'feature': r'(?i)feature[ \t]*:[ \t]*([^\r\n]+)',
}


def normalize_feature(feature: str, strict: bool = False) -> str:
    """Lowercase and collapse whitespace; strict mode only trims the ends"""
    if strict:
        return feature.strip()
    return ' '.join(feature.lower().split())


class PromptSet:
    """Identification, state-feature and re-prompt templates"""

    FILES = {
        STAGE_IDENTIFY: 'identify.txt',
        STAGE_STATE_FEATURE: 'state_feature.txt',
        'reprompt': 'reprompt.txt',
    }

    def __init__(self, prompts_dir: Union[str, Path, None] = None):
        self.prompts_dir = Path(prompts_dir) if prompts_dir else PROMPTS_DIR
        self.templates: Dict[str, str] = {}
        for stage, filename in self.FILES.items():
            path = self.prompts_dir / filename
            if not path.exists():
                raise FileNotFoundError(f"Prompt template not found: {path}")
            self.templates[stage] = path.read_text(encoding='utf-8')

    def render(self, stage: str, record: ScreenRecord, box: BBox) -> str:
        return self.templates[stage].format(
            box=box.to_list(),
            source_instruction=record.source_instruction,
            screen_id=record.screen_id,
        )

    def reprompt(self, prompt: str) -> str:
        return f"{prompt.rstrip()}\n\n{self.templates['reprompt'].strip()}\n"


@dataclass
class ResponseParser:
    """Extracts verdict tokens with configurable regular expressions"""
    identify: str = DEFAULT_PATTERNS['identify']
    state: str = DEFAULT_PATTERNS['state']
    feature: str = DEFAULT_PATTERNS['feature']

    def __post_init__(self):
        self._identify = re.compile(self.identify)
        self._state = re.compile(self.state)
        self._feature = re.compile(self.feature)

    @classmethod
    def from_config(cls, patterns: Optional[Dict[str, str]]) -> 'ResponseParser':
        return cls(**{**DEFAULT_PATTERNS, **(patterns or {})})

    def parse_identification(self, text: str) -> Optional[bool]:
        m = self._identify.search(text)
        if m is None:
            return None
        return m.group(1).lower() == 'yes'

    def parse_state_feature(self, text: str) -> Optional[Tuple[ToggleState, str]]:
        state = self._state.search(text)
        feature = self._feature.search(text)
        if state is None or feature is None:
            return None
        name = feature.group(1).strip()
        if not name:
            return None
        return ToggleState(state.group(1).lower()), name
