"""
Annotation Pipeline
Box merging, two-annotator toggle identification and state-feature agreement
"""

import json
import logging
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from joblib import Parallel, delayed
from tqdm import tqdm

from src.actions import BBox
from src.errors import AnnotatorError, CheckpointError
from .boxes import DEFAULT_IOU_CUTOFF, merge_boxes
from .clients import AnnotatorClient, AnnotatorRequest, Highlight
from .prompting import (
    STAGE_IDENTIFY,
    STAGE_STATE_FEATURE,
    PromptSet,
    ResponseParser,
    normalize_feature,
)
from .records import AnnotatorVerdict, BoxKey, ScreenRecord, ToggleQuadruplet, box_key

logger = logging.getLogger(__name__)

AnnotatorPair = Tuple[AnnotatorClient, AnnotatorClient]


class DropReason(str, Enum):
    RETAINED = 'retained'
    IDENTIFICATION_DISAGREEMENT = 'identification-disagreement'
    NOT_TOGGLE = 'not-toggle'
    STATE_DISAGREEMENT = 'state-disagreement'
    FEATURE_DISAGREEMENT = 'feature-disagreement'
    ANNOTATOR_ERROR = 'annotator-error'


@dataclass
class BoxOutcome:
    """What happened to one (screen_id, box) unit"""
    screen_id: str
    box: BBox
    reason: DropReason
    identified: bool = False
    quadruplet: Optional[ToggleQuadruplet] = None
    verdicts: List[Dict[str, Any]] = field(default_factory=list)
    detail: str = ''

    @property
    def key(self) -> BoxKey:
        return box_key(self.screen_id, self.box)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'screen_id': self.screen_id,
            'box': self.box.to_list(),
            'reason': self.reason.value,
            'identified': self.identified,
            'quadruplet': self.quadruplet.to_dict() if self.quadruplet else None,
            'verdicts': self.verdicts,
            'detail': self.detail,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BoxOutcome':
        quad = data.get('quadruplet')
        return cls(
            screen_id=str(data['screen_id']),
            box=BBox.from_list(data['box']),
            reason=DropReason(data['reason']),
            identified=bool(data.get('identified', False)),
            quadruplet=ToggleQuadruplet.from_dict(quad) if quad else None,
            verdicts=list(data.get('verdicts', [])),
            detail=data.get('detail', ''),
        )


@dataclass
class AuditLog:
    """Per-reason counts; every input box lands in exactly one bucket"""
    records: int = 0
    boxes: int = 0
    identified: int = 0
    counts: Dict[str, int] = field(default_factory=lambda: {r.value: 0 for r in DropReason})

    def add(self, outcome: BoxOutcome) -> None:
        self.boxes += 1
        self.identified += outcome.identified
        self.counts[outcome.reason.value] += 1

    @property
    def retained(self) -> int:
        return self.counts[DropReason.RETAINED.value]

    @property
    def errored(self) -> int:
        return self.counts[DropReason.ANNOTATOR_ERROR.value]

    @property
    def dropped(self) -> Dict[str, int]:
        return {k: v for k, v in self.counts.items()
                if k not in (DropReason.RETAINED.value, DropReason.ANNOTATOR_ERROR.value)}

    def is_conserved(self) -> bool:
        return self.boxes == self.retained + sum(self.dropped.values()) + self.errored

    def funnel(self) -> Dict[str, int]:
        return {'boxes': self.boxes, 'toggles': self.identified, 'retained': self.retained}

    def to_dict(self) -> Dict[str, Any]:
        return {'records': self.records, 'boxes': self.boxes, 'identified': self.identified,
                'counts': dict(self.counts)}


class Checkpoint:
    """Append-only JSONL of finished box outcomes"""

    def __init__(self, path: Union[str, Path], restart: bool = False):
        self.path = Path(path)
        self._lock = threading.Lock()
        if restart and self.path.exists():
            logger.info("Restart requested, discarding checkpoint %s", self.path)
            self.path.unlink()

    def load(self) -> Dict[BoxKey, BoxOutcome]:
        done: Dict[BoxKey, BoxOutcome] = {}
        if not self.path.exists():
            return done
        with open(self.path, 'r', encoding='utf-8') as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    outcome = BoxOutcome.from_dict(json.loads(line))
                except (ValueError, KeyError, TypeError) as e:
                    raise CheckpointError(
                        f"Checkpoint {self.path} is corrupt at line {lineno} ({e}); "
                        f"rerun with --restart to start over"
                    )
                done[outcome.key] = outcome
        logger.info("Resuming from checkpoint with %d finished boxes", len(done))
        return done

    def append(self, outcome: BoxOutcome) -> None:
        line = json.dumps(outcome.to_dict(), sort_keys=True)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, 'a', encoding='utf-8') as f:
                f.write(line + '\n')
                f.flush()


@dataclass
class PipelineResult:
    quadruplets: List[ToggleQuadruplet]
    outcomes: List[BoxOutcome]
    audit: AuditLog

    def write(self, output_dir: Union[str, Path]) -> Dict[str, Path]:
        """Write quadruplets.jsonl, audit.jsonl and audit_summary.json"""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            'quadruplets': output_dir / 'quadruplets.jsonl',
            'audit': output_dir / 'audit.jsonl',
            'summary': output_dir / 'audit_summary.json',
        }
        with open(paths['quadruplets'], 'w', encoding='utf-8') as f:
            for q in self.quadruplets:
                f.write(json.dumps(q.to_dict(), sort_keys=True) + '\n')
        with open(paths['audit'], 'w', encoding='utf-8') as f:
            for outcome in self.outcomes:
                f.write(json.dumps(outcome.to_dict(), sort_keys=True) + '\n')
        paths['summary'].write_text(json.dumps(self.audit.to_dict(), indent=2, sort_keys=True) + '\n',
                                    encoding='utf-8')
        return paths


def _sort_key(item) -> Tuple[str, List[int]]:
    return item.screen_id, item.box.to_list()


class AnnotationPipeline:
    """
    Two-annotator agreement pipeline

    A box is kept only when both annotators call it a toggle and then agree on
    its state and (normalized) feature name.
    """

    def __init__(
        self,
        annotators: AnnotatorPair,
        prompts: Optional[PromptSet] = None,
        parser: Optional[ResponseParser] = None,
        strict_feature_match: bool = False,
        iou_cutoff: float = DEFAULT_IOU_CUTOFF,
        n_workers: int = 4,
        concurrent_queries: bool = True,
        reprompt_limit: int = 1,
    ):
        if len(annotators) != 2:
            raise ValueError(f"Exactly two annotators are required, got {len(annotators)}")
        self.annotators = tuple(annotators)
        self.prompts = prompts or PromptSet()
        self.parser = parser or ResponseParser()
        self.strict_feature_match = strict_feature_match
        self.iou_cutoff = iou_cutoff
        self.n_workers = max(1, n_workers)
        self.concurrent_queries = concurrent_queries
        self.reprompt_limit = reprompt_limit

    @classmethod
    def from_config(cls, annotators: AnnotatorPair, annotation_cfg: Dict[str, Any]) -> 'AnnotationPipeline':
        return cls(
            annotators,
            prompts=PromptSet(annotation_cfg.get('prompts_dir')),
            parser=ResponseParser.from_config(annotation_cfg.get('patterns')),
            strict_feature_match=annotation_cfg.get('strict_feature_match', False),
            iou_cutoff=annotation_cfg.get('iou_cutoff', DEFAULT_IOU_CUTOFF),
            n_workers=annotation_cfg.get('n_workers', 4),
            concurrent_queries=annotation_cfg.get('concurrent_queries', True),
            reprompt_limit=annotation_cfg.get('reprompt_limit', 1),
        )

    def _parse(self, stage: str, text: str):
        if stage == STAGE_IDENTIFY:
            return self.parser.parse_identification(text)
        return self.parser.parse_state_feature(text)

    def query(self, client: AnnotatorClient, stage: str, record: ScreenRecord, box: BBox) -> AnnotatorVerdict:
        """Ask one annotator, re-prompting once on an unreadable reply"""
        prompt = self.prompts.render(stage, record, box)
        request = AnnotatorRequest(record.screen_id, box, stage, prompt, record.image_ref, Highlight(box))

        for attempt in range(1 + self.reprompt_limit):
            text = client.complete(request)
            parsed = self._parse(stage, text)
            if parsed is not None:
                if stage == STAGE_IDENTIFY:
                    return AnnotatorVerdict(client.annotator_id, parsed, raw_response=text)
                state, feature = parsed
                return AnnotatorVerdict(client.annotator_id, True, state, feature, raw_response=text)
            logger.warning("Unparseable %s reply from %s on %s %s: %r",
                           stage, client.annotator_id, record.screen_id, box.to_list(), text[:120])
            request = replace(request, prompt=self.prompts.reprompt(prompt))

        raise AnnotatorError(f"Annotator {client.annotator_id} gave no parseable {stage} verdict "
                             f"for {record.screen_id} {box.to_list()}")

    def _ask_both(self, stage: str, record: ScreenRecord, box: BBox) -> Tuple[AnnotatorVerdict, AnnotatorVerdict]:
        if self.concurrent_queries:
            g, q = Parallel(n_jobs=2, backend='threading')(
                delayed(self.query)(client, stage, record, box) for client in self.annotators
            )
        else:
            g, q = (self.query(client, stage, record, box) for client in self.annotators)
        return g, q

    def identify_verdicts(self, record: ScreenRecord, box: BBox) -> Tuple[AnnotatorVerdict, AnnotatorVerdict]:
        return self._ask_both(STAGE_IDENTIFY, record, box)

    def state_feature_verdicts(self, record: ScreenRecord, box: BBox) -> Tuple[AnnotatorVerdict, AnnotatorVerdict]:
        return self._ask_both(STAGE_STATE_FEATURE, record, box)

    def agree(self, record: ScreenRecord, box: BBox, g: AnnotatorVerdict,
              q: AnnotatorVerdict) -> Tuple[Optional[ToggleQuadruplet], DropReason]:
        if g.state != q.state:
            return None, DropReason.STATE_DISAGREEMENT
        f_g = normalize_feature(g.feature, self.strict_feature_match)
        f_q = normalize_feature(q.feature, self.strict_feature_match)
        if f_g != f_q or not f_g:
            return None, DropReason.FEATURE_DISAGREEMENT
        return ToggleQuadruplet(record.screen_id, box, g.state, f_g, record.image_ref), DropReason.RETAINED

    def process_box(self, record: ScreenRecord, box: BBox) -> BoxOutcome:
        outcome = BoxOutcome(record.screen_id, box, DropReason.ANNOTATOR_ERROR)
        try:
            g, q = self.identify_verdicts(record, box)
            outcome.verdicts = [g.to_dict(), q.to_dict()]
            if not (g.is_toggle and q.is_toggle):
                outcome.reason = (DropReason.NOT_TOGGLE if not (g.is_toggle or q.is_toggle)
                                  else DropReason.IDENTIFICATION_DISAGREEMENT)
                return outcome

            outcome.identified = True
            g, q = self.state_feature_verdicts(record, box)
            outcome.verdicts += [g.to_dict(), q.to_dict()]
            outcome.quadruplet, outcome.reason = self.agree(record, box, g, q)
            if outcome.quadruplet is None:
                logger.info("Dropped %s %s: %s (%s/%s vs %s/%s)", record.screen_id, box.to_list(),
                            outcome.reason.value, g.state.value, g.feature, q.state.value, q.feature)
        except AnnotatorError as e:
            logger.error("Annotator error on %s %s: %s", record.screen_id, box.to_list(), e)
            outcome.reason = DropReason.ANNOTATOR_ERROR
            outcome.quadruplet = None
            outcome.detail = str(e)
        return outcome

    def run(self, records: Iterable[ScreenRecord], checkpoint: Optional[Checkpoint] = None,
            show_progress: bool = True) -> PipelineResult:
        """Annotate every merged box of every record"""
        records = list(records)
        audit = AuditLog(records=len(records))

        units: List[Tuple[ScreenRecord, BBox]] = []
        seen = set()
        for record in records:
            for box in merge_boxes(record.original_boxes, record.parsed_boxes, self.iou_cutoff):
                key = box_key(record.screen_id, box)
                if key in seen:
                    logger.warning("Duplicate box %s on screen %s skipped", box.to_list(), record.screen_id)
                    continue
                seen.add(key)
                units.append((record, box))

        done = checkpoint.load() if checkpoint else {}
        pending = [(r, b) for r, b in units if box_key(r.screen_id, b) not in done]
        logger.info("%d records, %d boxes, %d already annotated", len(records), len(units), len(units) - len(pending))

        def work(record: ScreenRecord, box: BBox) -> BoxOutcome:
            outcome = self.process_box(record, box)
            if checkpoint is not None:
                checkpoint.append(outcome)
            return outcome

        fresh = Parallel(n_jobs=self.n_workers, backend='threading')(
            delayed(work)(r, b) for r, b in tqdm(pending, desc="Annotating boxes", disable=not show_progress)
        )

        by_key = {k: v for k, v in done.items() if k in seen}
        by_key.update({o.key: o for o in fresh})
        outcomes = sorted(by_key.values(), key=_sort_key)
        for outcome in outcomes:
            audit.add(outcome)
        if not audit.is_conserved():
            raise AssertionError(f"Audit does not balance: {audit.to_dict()}")

        quadruplets = [o.quadruplet for o in outcomes if o.quadruplet is not None]
        return PipelineResult(quadruplets, outcomes, audit)


def identify_toggle(record: ScreenRecord, box: BBox, annotators: AnnotatorPair, **kwargs) -> bool:
    """True only when both annotators identify the box as a toggle"""
    g, q = AnnotationPipeline(annotators, **kwargs).identify_verdicts(record, box)
    return g.is_toggle and q.is_toggle


def annotate_state_feature(record: ScreenRecord, box: BBox, annotators: AnnotatorPair,
                           **kwargs) -> Optional[ToggleQuadruplet]:
    """Quadruplet when both annotators agree on state and feature, else None"""
    pipeline = AnnotationPipeline(annotators, **kwargs)
    g, q = pipeline.state_feature_verdicts(record, box)
    quadruplet, _ = pipeline.agree(record, box, g, q)
    return quadruplet


def run_pipeline(records: Iterable[ScreenRecord], annotators: AnnotatorPair,
                 config: Optional[Dict[str, Any]] = None,
                 checkpoint_path: Optional[Union[str, Path]] = None,
                 restart: bool = False, show_progress: bool = True) -> PipelineResult:
    """Run the full pipeline, resuming from ``checkpoint_path`` when it exists"""
    pipeline = AnnotationPipeline.from_config(annotators, config or {})
    checkpoint = Checkpoint(checkpoint_path, restart=restart) if checkpoint_path else None
    return pipeline.run(records, checkpoint, show_progress=show_progress)
