"""
State Control Metrics
Eight-way scoring of positive (CLICK) and negative (COMPLETED) toggle instructions
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Sequence

from src.actions import Action, ActionType, Point
from src.matching import GroundTruthStep, MatchConfig, MatchResult, click_match

logger = logging.getLogger(__name__)

UNDEFINED = float('nan')


class Polarity(str, Enum):
    POSITIVE = 'positive'
    NEGATIVE = 'negative'


@dataclass(frozen=True)
class ScoredSample:
    """One benchmark sample with the agent prediction and its match result"""
    polarity: Polarity
    gt: GroundTruthStep
    pred: Action
    match: MatchResult
    positive_click_point: Point

    def __post_init__(self):
        object.__setattr__(self, 'polarity', Polarity(self.polarity))
        expected = ActionType.CLICK if self.polarity == Polarity.POSITIVE else ActionType.COMPLETED
        if self.gt.action.type != expected:
            raise ValueError(f"{self.polarity.value} sample must be labelled {expected.value}, "
                             f"got {self.gt.action.type.value}")


@dataclass
class StateControlReport:
    o_tmr: float
    o_amr: float
    p_tmr: float
    p_amr: float
    p_fnr: float
    n_amr: float
    n_fptr: float
    n_fpr: float
    counts: Dict[str, int] = field(default_factory=dict)

    METRICS = ('o_tmr', 'o_amr', 'p_tmr', 'p_amr', 'p_fnr', 'n_amr', 'n_fptr', 'n_fpr')

    def metrics(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.METRICS}


def _rate(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else UNDEFINED


def count_state_control(samples: Sequence[ScoredSample], cfg: MatchConfig) -> Dict[str, int]:
    """Integer bucket counts behind the eight rates"""
    counts = {
        'total': 0, 'positives': 0, 'negatives': 0,
        'type_match': 0, 'exact_match': 0,
        'pos_click': 0, 'pos_exact': 0, 'pos_completed': 0,
        'neg_completed': 0, 'neg_click': 0, 'neg_click_on_toggle': 0,
    }
    for s in samples:
        counts['total'] += 1
        counts['type_match'] += s.match.type_match
        counts['exact_match'] += s.match.exact_match
        predicted = s.pred.type
        if s.polarity == Polarity.POSITIVE:
            counts['positives'] += 1
            counts['pos_click'] += predicted == ActionType.CLICK
            counts['pos_exact'] += s.match.exact_match
            counts['pos_completed'] += predicted == ActionType.COMPLETED
        else:
            counts['negatives'] += 1
            counts['neg_completed'] += predicted == ActionType.COMPLETED
            if predicted == ActionType.CLICK:
                counts['neg_click'] += 1
                hit = click_match(s.positive_click_point, s.gt.layout, s.pred.point, cfg)
                counts['neg_click_on_toggle'] += hit.exact_match
    return counts


def _check_identities(c: Dict[str, int]) -> None:
    # O-TMR and O-AMR must decompose into the positive and negative buckets
    if c['type_match'] != c['pos_click'] + c['neg_completed']:
        raise AssertionError(f"type-match count does not decompose: {c}")
    if c['exact_match'] != c['pos_exact'] + c['neg_completed']:
        raise AssertionError(f"exact-match count does not decompose: {c}")


def eval_state_control(samples: Sequence[ScoredSample], cfg: MatchConfig = MatchConfig()) -> StateControlReport:
    """
    Compute O-TMR, O-AMR, P-TMR, P-AMR, P-FNR, N-AMR, N-FPTR and N-FPR

    Args:
        samples: scored samples of both polarities
        cfg: match config used to decide whether a negative's CLICK lands on the toggle

    Returns:
        StateControlReport; buckets with no samples report NaN
    """
    if not samples:
        raise ValueError("eval_state_control needs at least one sample")

    c = count_state_control(samples, cfg)
    _check_identities(c)
    if not c['positives'] or not c['negatives']:
        logger.warning("Only one polarity present (%d positive, %d negative); the other bucket is undefined",
                       c['positives'], c['negatives'])

    return StateControlReport(
        o_tmr=_rate(c['type_match'], c['total']),
        o_amr=_rate(c['exact_match'], c['total']),
        p_tmr=_rate(c['pos_click'], c['positives']),
        p_amr=_rate(c['pos_exact'], c['positives']),
        p_fnr=_rate(c['pos_completed'], c['positives']),
        n_amr=_rate(c['neg_completed'], c['negatives']),
        n_fptr=_rate(c['neg_click'], c['negatives']),
        n_fpr=_rate(c['neg_click_on_toggle'], c['negatives']),
        counts=c,
    )
