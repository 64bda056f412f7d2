"""
Data package
"""

from .episodes import Episode, EpisodeStep
from .builder import (
    InstructionTemplates,
    Sample,
    SplitManifest,
    apply_split,
    build_benchmark,
    dataset_stats,
    expand_all,
    expand_quadruplet,
    quadruplet_key,
    sample_id_for,
    split_dataset,
)
from .loader import DataLoader, iter_jsonl, write_jsonl

__all__ = [
    'Episode',
    'EpisodeStep',
    'InstructionTemplates',
    'Sample',
    'SplitManifest',
    'apply_split',
    'build_benchmark',
    'dataset_stats',
    'expand_all',
    'expand_quadruplet',
    'quadruplet_key',
    'sample_id_for',
    'split_dataset',
    'DataLoader',
    'iter_jsonl',
    'write_jsonl',
]
