"""
Dynamic Tasks
Task registry loaded from tasks.yaml with per-task subtask checkers
"""

import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import yaml

from src.errors import ConfigError, UnknownTaskError
from .world import NavigationGraph, WorldState, build_default_graph

logger = logging.getLogger(__name__)

TASKS_PATH = Path(__file__).parent / 'tasks.yaml'


@dataclass(frozen=True)
class SubtaskChecker:
    """Predicate over the final world state"""
    kind: str
    target: str
    expect: Optional[bool] = None

    def __post_init__(self):
        if self.kind not in ('toggle', 'app_opened'):
            raise ValueError(f"Unknown subtask kind '{self.kind}'")
        if self.kind == 'toggle' and self.expect is None:
            raise ValueError(f"Toggle subtask on '{self.target}' needs an expected state")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SubtaskChecker':
        if 'toggle' in data:
            return cls('toggle', data['toggle'], bool(data['expect']))
        if 'app_opened' in data:
            return cls('app_opened', str(data['app_opened']))
        raise ValueError(f"Subtask needs 'toggle' or 'app_opened': {data}")

    def check(self, state: WorldState) -> bool:
        if self.kind == 'toggle':
            return state.toggles[self.target] == self.expect
        return state.opened_app is not None and state.opened_app.lower() == self.target.lower()

    def bind(self, bindings: Dict[str, str]) -> 'SubtaskChecker':
        return replace(self, target=self.target.format(**bindings)) if bindings else self

    def describe(self) -> str:
        if self.kind == 'toggle':
            return f"{self.target} {'on' if self.expect else 'off'}"
        return f"{self.target} opened"


@dataclass(frozen=True)
class DynTask:
    task_id: str
    instruction: str
    initial_state: Dict[str, bool]
    subtask_checkers: Tuple[SubtaskChecker, ...]
    verify: bool = False
    params: Dict[str, str] = field(default_factory=dict)
    bindings: Dict[str, str] = field(default_factory=dict)

    @property
    def targets(self) -> List[SubtaskChecker]:
        return [c for c in self.subtask_checkers if c.kind == 'toggle']

    def instantiate(self, seed: int, graph: NavigationGraph) -> 'DynTask':
        """Resolve templated parameters (e.g. ``{app_name}``) from the seed"""
        if not self.params:
            return self
        rng = random.Random(f"{self.task_id}:{seed}")
        bindings = {}
        for name, pool in self.params.items():
            choices = getattr(graph, pool, None)
            if not choices:
                raise ConfigError(f"Task {self.task_id}: parameter pool '{pool}' is empty or unknown")
            bindings[name] = rng.choice(list(choices))
        return replace(
            self,
            instruction=self.instruction.format(**bindings),
            subtask_checkers=tuple(c.bind(bindings) for c in self.subtask_checkers),
            params={},
            bindings=bindings,
        )


def _build_task(entry: Dict[str, Any], defaults: Dict[str, bool]) -> DynTask:
    checkers = tuple(SubtaskChecker.from_dict(s) for s in entry.get('subtasks', []))
    if not checkers:
        raise ConfigError(f"Task {entry.get('task_id')} has no subtasks")
    verify = bool(entry.get('verify', False))

    initial = dict(defaults)
    for c in checkers:
        if c.kind == 'toggle':
            initial[c.target] = c.expect if verify else not c.expect
    initial.update(entry.get('initial', {}))

    return DynTask(
        task_id=entry['task_id'],
        instruction=entry['instruction'],
        initial_state=initial,
        subtask_checkers=checkers,
        verify=verify,
        params=dict(entry.get('params', {})),
    )


class TaskRegistry:
    """Registered dynamic tasks in file order"""

    def __init__(self, tasks_path: Union[str, Path, None] = None, graph: Optional[NavigationGraph] = None):
        self.tasks_path = Path(tasks_path) if tasks_path else TASKS_PATH
        self.graph = graph or build_default_graph()
        with open(self.tasks_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}

        defaults = {k: bool(v) for k, v in (data.get('defaults') or {}).items()}
        self.tasks: Dict[str, DynTask] = {}
        for entry in data.get('tasks', []):
            task = _build_task(entry, defaults)
            if task.task_id in self.tasks:
                raise ConfigError(f"Duplicate task id {task.task_id}")
            self._validate(task)
            self.tasks[task.task_id] = task
        logger.debug("Loaded %d dynamic tasks from %s", len(self.tasks), self.tasks_path)

    def _validate(self, task: DynTask) -> None:
        known = set(self.graph.toggle_screen)
        if set(task.initial_state) != known:
            raise ConfigError(f"Task {task.task_id} initial state must set exactly the toggles {sorted(known)}")
        for c in task.targets:
            if c.target not in known:
                raise ConfigError(f"Task {task.task_id} checks unknown toggle '{c.target}'")
            starts_done = task.initial_state[c.target] == c.expect
            if task.verify and not starts_done:
                raise ConfigError(f"Verify task {task.task_id} must start with {c.describe()}")

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[DynTask]:
        return iter(self.tasks.values())

    @property
    def ids(self) -> List[str]:
        return list(self.tasks)

    def get(self, task_id: str) -> DynTask:
        if task_id not in self.tasks:
            raise UnknownTaskError(task_id, self.tasks)
        return self.tasks[task_id]

    def select(self, task_ids: Optional[Sequence[str]] = None) -> List[DynTask]:
        if not task_ids:
            return list(self.tasks.values())
        return [self.get(t) for t in task_ids]
