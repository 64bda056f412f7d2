"""
Simulation package
"""

from .world import (
    DEFAULT_BUDGET,
    HOME,
    NavigationGraph,
    Observation,
    Screen,
    Termination,
    ToggleWorld,
    Widget,
    WidgetKind,
    WorldState,
    build_default_graph,
)
from .tasks import DynTask, SubtaskChecker, TaskRegistry
from .suite import EpisodeResult, SuiteReport, TaskScore, run_episode, run_suite, score_episode

__all__ = [
    'DEFAULT_BUDGET',
    'HOME',
    'NavigationGraph',
    'Observation',
    'Screen',
    'Termination',
    'ToggleWorld',
    'Widget',
    'WidgetKind',
    'WorldState',
    'build_default_graph',
    'DynTask',
    'SubtaskChecker',
    'TaskRegistry',
    'EpisodeResult',
    'SuiteReport',
    'TaskScore',
    'run_episode',
    'run_suite',
    'score_episode',
]
