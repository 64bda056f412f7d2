"""
Agentic Metrics
Step-level TMR/AMR, trajectory-level TSR and grounding GMR over episodes
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from src.actions import Action, ActionType
from src.matching import GroundTruthStep, MatchResult
from .state_control import UNDEFINED


@dataclass(frozen=True)
class ScoredStep:
    gt: GroundTruthStep
    pred: Action
    match: MatchResult


@dataclass(frozen=True)
class ScoredTrajectory:
    episode_id: str
    steps: Sequence[ScoredStep]

    def __post_init__(self):
        if not self.steps:
            raise ValueError(f"Trajectory '{self.episode_id}' has no steps")
        object.__setattr__(self, 'steps', tuple(self.steps))

    @property
    def succeeded(self) -> bool:
        return all(step.match.exact_match for step in self.steps)


@dataclass
class AgenticReport:
    tmr: float
    amr: float
    tsr: float
    gmr: float
    step_count: int
    trajectory_count: int
    click_step_count: int
    counts: Dict[str, int] = field(default_factory=dict)

    METRICS = ('tmr', 'amr', 'tsr', 'gmr')

    def metrics(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.METRICS}


def eval_agentic(trajectories: Sequence[ScoredTrajectory]) -> AgenticReport:
    """
    Aggregate scored episodes

    GMR counts exact matches among steps whose ground-truth action is a CLICK.
    """
    if not trajectories:
        raise ValueError("eval_agentic needs at least one trajectory")

    steps: List[ScoredStep] = [step for traj in trajectories for step in traj.steps]
    type_hits = sum(step.match.type_match for step in steps)
    exact_hits = sum(step.match.exact_match for step in steps)
    successes = sum(traj.succeeded for traj in trajectories)
    click_steps = [step for step in steps if step.gt.action.type == ActionType.CLICK]
    click_hits = sum(step.match.exact_match for step in click_steps)

    return AgenticReport(
        tmr=type_hits / len(steps),
        amr=exact_hits / len(steps),
        tsr=successes / len(trajectories),
        gmr=click_hits / len(click_steps) if click_steps else UNDEFINED,
        step_count=len(steps),
        trajectory_count=len(trajectories),
        click_step_count=len(click_steps),
        counts={
            'type_match': type_hits,
            'exact_match': exact_hits,
            'successful_trajectories': successes,
            'click_exact_match': click_hits,
        },
    )
