"""
Prediction Scoring
Align raw agent outputs with benchmark samples or episode steps and match them
"""

import logging
from typing import Dict, List, Mapping, Sequence, Tuple, Union

from src.actions import Action, ActionType, Dialect, get_dialect, parse_or_other
from src.errors import MissingPredictionError
from src.matching import MatchConfig, match_steps
from .agentic import ScoredStep, ScoredTrajectory
from .state_control import ScoredSample

logger = logging.getLogger(__name__)


def _resolve(keys: Sequence, predictions: Mapping, dialect: Dialect, strict: bool) -> Tuple[List[Action], List]:
    missing = [k for k in keys if k not in predictions]
    if missing and not strict:
        raise MissingPredictionError([f"{k[0]}:{k[1]}" if isinstance(k, tuple) else str(k) for k in missing])
    if missing:
        logger.warning("%d predictions missing; scored as non-matches", len(missing))
    actions = [parse_or_other(predictions[k], dialect) if k in predictions else Action.other('') for k in keys]
    other = sum(a.type == ActionType.OTHER and a.raw != '' for a in actions)
    if other:
        logger.warning("%d predictions scored as OTHER in dialect '%s'", other, dialect.name)
    return actions, missing


def score_samples(samples: Sequence, predictions: Mapping[str, str], cfg: MatchConfig = MatchConfig(),
                  dialect: Union[str, Dialect] = 'canonical', strict: bool = False,
                  n_jobs: int = 1) -> Tuple[List[ScoredSample], List[str]]:
    """
    Parse and match one prediction per state-control sample

    Unparseable predictions score as OTHER. A missing prediction raises
    MissingPredictionError unless ``strict`` is set, in which case it is
    listed and scored as a non-match.
    """
    dialect = get_dialect(dialect)
    ids = [s.sample_id for s in samples]
    actions, missing = _resolve(ids, predictions, dialect, strict)
    gts = [s.ground_truth() for s in samples]
    results = match_steps(list(zip(gts, actions)), cfg, n_jobs)
    scored = [
        ScoredSample(s.polarity, gt, pred, match, s.toggle_box.center)
        for s, gt, pred, match in zip(samples, gts, actions, results)
    ]
    return scored, missing


def score_episodes(episodes: Sequence, predictions: Mapping[Tuple[str, int], str],
                   cfg: MatchConfig = MatchConfig(), dialect: Union[str, Dialect] = 'canonical',
                   strict: bool = False) -> Tuple[List[ScoredTrajectory], List[str]]:
    """Per-step counterpart of ``score_samples`` keyed by ``(episode_id, step)``"""
    dialect = get_dialect(dialect)
    keys = [(ep.episode_id, step.step) for ep in episodes for step in ep.steps]
    actions, missing = _resolve(keys, predictions, dialect, strict)
    gts = [step.ground_truth() for ep in episodes for step in ep.steps]
    results = match_steps(list(zip(gts, actions)), cfg)

    scored: Dict[str, List[ScoredStep]] = {}
    for (episode_id, _), gt, pred, match in zip(keys, gts, actions, results):
        scored.setdefault(episode_id, []).append(ScoredStep(gt, pred, match))
    trajectories = [ScoredTrajectory(ep.episode_id, scored[ep.episode_id]) for ep in episodes]
    return trajectories, [f"{e}:{s}" for e, s in missing]
