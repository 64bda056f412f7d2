"""
Annotation package
"""

from .records import (
    AnnotatorVerdict,
    ScreenRecord,
    ToggleQuadruplet,
    ToggleState,
    box_key,
)
from .boxes import DEFAULT_IOU_CUTOFF, iou, iou_matrix, merge_boxes
from .clients import (
    AnnotatorClient,
    AnnotatorRequest,
    Highlight,
    HttpAnnotatorClient,
    ScriptedAnnotatorClient,
    create_annotators,
    load_scripted_annotators,
)
from .prompting import PromptSet, ResponseParser, normalize_feature
from .pipeline import (
    AnnotationPipeline,
    AuditLog,
    BoxOutcome,
    Checkpoint,
    DropReason,
    PipelineResult,
    annotate_state_feature,
    identify_toggle,
    run_pipeline,
)

__all__ = [
    'AnnotatorVerdict',
    'ScreenRecord',
    'ToggleQuadruplet',
    'ToggleState',
    'box_key',
    'DEFAULT_IOU_CUTOFF',
    'iou',
    'iou_matrix',
    'merge_boxes',
    'AnnotatorClient',
    'AnnotatorRequest',
    'Highlight',
    'HttpAnnotatorClient',
    'ScriptedAnnotatorClient',
    'create_annotators',
    'load_scripted_annotators',
    'PromptSet',
    'ResponseParser',
    'normalize_feature',
    'AnnotationPipeline',
    'AuditLog',
    'BoxOutcome',
    'Checkpoint',
    'DropReason',
    'PipelineResult',
    'annotate_state_feature',
    'identify_toggle',
    'run_pipeline',
]
