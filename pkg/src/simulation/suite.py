"""
Dynamic Suite
Episode loop, partial-credit scoring and the suite success-rate report
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from joblib import Parallel, delayed
from tqdm import tqdm

from src.actions import Dialect, format_action, get_dialect, parse_action
from src.errors import ActionParseError, ProtocolError
from src.metrics import format_suite_rate
from .tasks import DynTask
from .world import DEFAULT_BUDGET, Termination, ToggleWorld, WorldState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskScore:
    task_id: str
    success_ratio: float
    satisfied: List[bool]


def score_episode(task: DynTask, final_state: WorldState) -> TaskScore:
    """Fraction of subtask checkers satisfied by the final state"""
    satisfied = [c.check(final_state) for c in task.subtask_checkers]
    return TaskScore(task.task_id, sum(satisfied) / len(satisfied), satisfied)


@dataclass
class EpisodeResult:
    task_id: str
    instruction: str
    success_ratio: float
    steps_taken: int
    termination: Termination
    satisfied: List[bool] = field(default_factory=list)
    transcript: List[Dict[str, Any]] = field(default_factory=list)
    final_toggles: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'task_id': self.task_id,
            'instruction': self.instruction,
            'success_ratio': self.success_ratio,
            'steps_taken': self.steps_taken,
            'termination': self.termination.value,
            'satisfied': self.satisfied,
            'final_toggles': self.final_toggles,
            'transcript': self.transcript,
        }


def _next_action(agent, request: Dict[str, Any], dialect: Dialect, retries: int):
    """Ask for an action, re-asking on unparseable output; None means give up"""
    raws = []
    for attempt in range(1 + retries):
        raw = agent.act(request)
        raws.append(raw)
        try:
            return parse_action(raw, dialect), raws
        except ActionParseError as e:
            logger.warning("Unparseable action from %s (attempt %d): %s", agent.name, attempt + 1, e)
            request = {**request, 'error': f"Could not parse your action: {e}"}
    return None, raws


def run_episode(agent, task: DynTask, world: ToggleWorld, seed: int = 0,
                dialect: Union[str, Dialect] = 'canonical', parse_retries: int = 1) -> EpisodeResult:
    """
    Run one task to termination

    The episode ends when the agent outputs COMPLETED, the step budget runs
    out, or the agent breaks the protocol; it is scored on the state reached.
    """
    dialect = get_dialect(dialect)
    task = task.instantiate(seed, world.graph)
    state, obs = world.reset(task, seed)
    agent.begin_episode(task)

    history: List[str] = []
    transcript: List[Dict[str, Any]] = []
    termination: Optional[Termination] = None
    while termination is None:
        request = {'observation': obs.to_dict(), 'instruction': task.instruction, 'history': list(history)}
        try:
            action, raws = _next_action(agent, request, dialect, parse_retries)
        except ProtocolError as e:
            logger.error("Agent %s broke the protocol on %s: %s", agent.name, task.task_id, e)
            termination = Termination.PROTOCOL_ERROR
            break
        if action is None:
            transcript.append({'step': state.step_count, 'observation': obs.to_dict(), 'raw': raws, 'action': None})
            termination = Termination.PROTOCOL_ERROR
            break

        transcript.append({'step': state.step_count, 'observation': obs.to_dict(), 'raw': raws,
                           'action': action.to_dict()})
        history.append(format_action(action, dialect))
        state, obs, done = world.step(state, action)
        if done:
            termination = state.termination

    score = score_episode(task, state)
    logger.debug("%s: %.2f after %d steps (%s)", task.task_id, score.success_ratio, state.step_count,
                 termination.value)
    return EpisodeResult(
        task_id=task.task_id,
        instruction=task.instruction,
        success_ratio=score.success_ratio,
        steps_taken=state.step_count,
        termination=termination,
        satisfied=score.satisfied,
        transcript=transcript,
        final_toggles=dict(state.toggles),
    )


@dataclass
class SuiteReport:
    agent: str
    results: List[EpisodeResult]

    @property
    def n_tasks(self) -> int:
        return len(self.results)

    @property
    def total_success(self) -> float:
        return sum(r.success_ratio for r in self.results)

    @property
    def rate(self) -> float:
        """Mean success ratio x 100"""
        return self.total_success / self.n_tasks * 100 if self.results else 0.0

    @property
    def summary(self) -> str:
        return format_suite_rate(self.total_success, self.n_tasks)

    def by_task(self) -> Dict[str, float]:
        return {r.task_id: r.success_ratio for r in self.results}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'agent': self.agent,
            'rate': self.rate,
            'total_success': self.total_success,
            'n_tasks': self.n_tasks,
            'summary': self.summary,
            'tasks': [{'task_id': r.task_id, 'success_ratio': r.success_ratio, 'steps_taken': r.steps_taken,
                       'termination': r.termination.value} for r in self.results],
        }

    def write(self, output_dir: Union[str, Path]) -> Path:
        """One transcript file per episode plus suite_summary.json"""
        output_dir = Path(output_dir)
        transcripts = output_dir / 'transcripts'
        transcripts.mkdir(parents=True, exist_ok=True)
        for r in self.results:
            (transcripts / f"{r.task_id}.json").write_text(json.dumps(r.to_dict(), indent=2, sort_keys=True) + '\n',
                                                          encoding='utf-8')
        summary_path = output_dir / 'suite_summary.json'
        summary_path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n', encoding='utf-8')
        return summary_path


def run_suite(agent, tasks: Sequence[DynTask], budget: int = DEFAULT_BUDGET, seed: int = 0,
              dialect: Union[str, Dialect] = 'canonical', n_jobs: int = 1, world: Optional[ToggleWorld] = None,
              show_progress: bool = True) -> SuiteReport:
    """
    Run every task once and aggregate

    With ``n_jobs > 1`` each episode gets its own forked agent and the
    results keep task order.
    """
    world = world or ToggleWorld(budget=budget)
    if world.budget != budget:
        world = ToggleWorld(world.graph, budget)

    def one(task: DynTask) -> EpisodeResult:
        worker = agent.fork() if n_jobs != 1 else agent
        try:
            return run_episode(worker, task, world, seed, dialect)
        finally:
            if worker is not agent:
                worker.close()

    iterator = tqdm(tasks, desc="Dynamic tasks", disable=not show_progress)
    if n_jobs == 1:
        results = [one(t) for t in iterator]
    else:
        results = Parallel(n_jobs=n_jobs, backend='threading')(delayed(one)(t) for t in iterator)
    return SuiteReport(getattr(agent, 'name', 'agent'), list(results))
