"""
Training Export
Conversation-format training examples with action history in three modes
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from src.actions import Action, Dialect, format_action, get_dialect, parse_action
from src.data import Episode, Sample
from src.errors import ActionParseError, ExportError, UnsupportedActionError
from .synth import ChainTemplates, default_templates, synth_chains

logger = logging.getLogger(__name__)


class HistoryMode(str, Enum):
    TEXT_CHAIN = 'text-chain'
    SCREENSHOT_CHAIN = 'screenshot-chain'
    NONE = 'none'


@dataclass(frozen=True)
class HistoryItem:
    action: Action
    image_ref: str = ''


@dataclass(frozen=True)
class TrainingExample:
    example_id: str
    instruction: str
    image_ref: str
    reasoning: str
    final_action: Action
    history: Tuple[HistoryItem, ...] = ()
    source: str = 'state-control'
    meta: Dict[str, Any] = field(default_factory=dict, compare=False)


def examples_from_samples(samples: Sequence[Sample], templates: Optional[ChainTemplates] = None,
                          n_jobs: int = 1) -> List[TrainingExample]:
    """One example per sample, reasoning synthesized from its toggle state"""
    templates = templates or default_templates()
    examples = []
    for s, chain in zip(samples, synth_chains(samples, templates, n_jobs)):
        examples.append(TrainingExample(
            example_id=s.sample_id,
            instruction=s.instruction,
            image_ref=s.image_ref,
            reasoning=chain.render(templates),
            final_action=chain.final_action,
            meta={'feature': s.feature, 'polarity': s.polarity.value},
        ))
    return examples


def examples_from_episode(episode: Episode) -> List[TrainingExample]:
    """One example per step; earlier steps become the history"""
    examples = []
    for i, step in enumerate(episode.steps):
        history = tuple(HistoryItem(prev.action, prev.image_ref) for prev in episode.steps[:i])
        examples.append(TrainingExample(
            example_id=f"{episode.episode_id}:{step.step}",
            instruction=episode.instruction,
            image_ref=step.image_ref,
            reasoning=step.reasoning or '',
            final_action=step.action,
            history=history,
            source='episode',
        ))
    return examples


def _checked_action_text(example: TrainingExample, dialect: Dialect) -> str:
    try:
        text = format_action(example.final_action, dialect)
        parsed = parse_action(text, dialect)
    except (UnsupportedActionError, ActionParseError) as e:
        raise ExportError(f"Action cannot be expressed in dialect '{dialect.name}': {e}", example.example_id)
    if parsed != example.final_action:
        raise ExportError(f"Action {example.final_action.to_dict()} does not round-trip through "
                          f"dialect '{dialect.name}' (got {parsed.to_dict()})", example.example_id)
    return text


def to_conversation(example: TrainingExample, dialect: Dialect, history_mode: HistoryMode,
                    templates: Optional[ChainTemplates] = None) -> Dict[str, Any]:
    """
    Render one example

    Schema: ``id``, ``images`` (history screenshots then the current one),
    ``conversations`` (system, user, assistant turns as ``{role, content}``)
    and ``meta``. The assistant turn ends with the action on its own line.
    """
    templates = templates or default_templates()
    action_text = _checked_action_text(example, dialect)

    images: List[str] = []
    user_lines = [f"Instruction: {example.instruction}"]
    if history_mode == HistoryMode.TEXT_CHAIN and example.history:
        user_lines.append("Previous actions:")
        user_lines += [f"{i}. {format_action(h.action, dialect)}" for i, h in enumerate(example.history, start=1)]
    elif history_mode == HistoryMode.SCREENSHOT_CHAIN and example.history:
        images += [h.image_ref for h in example.history]
        user_lines.append("Previous screenshots: " + ' '.join('<image>' for _ in example.history))
    if example.image_ref:
        images.append(example.image_ref)
    user_lines.append("Current screenshot: <image>")

    assistant = f"{example.reasoning}\n{action_text}" if example.reasoning else action_text
    return {
        'id': example.example_id,
        'images': images,
        'conversations': [
            {'role': 'system', 'content': templates.system.format(dialect=dialect.name)},
            {'role': 'user', 'content': '\n'.join(user_lines)},
            {'role': 'assistant', 'content': assistant},
        ],
        'meta': {
            'history_mode': history_mode.value,
            'dialect': dialect.name,
            'source': example.source,
            'action_text': action_text,
            **example.meta,
        },
    }


def export_training(examples: Sequence[TrainingExample], dialect: Union[str, Dialect] = 'canonical',
                    history_mode: Union[str, HistoryMode] = HistoryMode.NONE,
                    output_path: Union[str, Path, None] = None,
                    templates: Optional[ChainTemplates] = None) -> List[Dict[str, Any]]:
    """
    Convert examples to conversations, optionally writing them as JSONL

    Aborts with ExportError on the first example whose action does not
    round-trip through the dialect; nothing is written in that case.
    """
    dialect = get_dialect(dialect)
    history_mode = HistoryMode(history_mode)
    conversations = [to_conversation(e, dialect, history_mode, templates) for e in examples]

    if output_path is not None:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            for conv in conversations:
                f.write(json.dumps(conv, sort_keys=True, ensure_ascii=False) + '\n')
        logger.info("Wrote %d %s examples to %s", len(conversations), history_mode.value, output_path)
    return conversations
