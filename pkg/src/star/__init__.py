"""
StaR package
"""

from .synth import (
    ChainTemplates,
    StarChain,
    ToggleAnnotation,
    build_chain,
    default_templates,
    desired_state_for,
    group_annotations,
    refine_episode,
    synth_chain,
    synth_chains,
)
from .export import (
    HistoryItem,
    HistoryMode,
    TrainingExample,
    examples_from_episode,
    examples_from_samples,
    export_training,
    to_conversation,
)

__all__ = [
    'ChainTemplates',
    'StarChain',
    'ToggleAnnotation',
    'build_chain',
    'default_templates',
    'desired_state_for',
    'group_annotations',
    'refine_episode',
    'synth_chain',
    'synth_chains',
    'HistoryItem',
    'HistoryMode',
    'TrainingExample',
    'examples_from_episode',
    'examples_from_samples',
    'export_training',
    'to_conversation',
]
