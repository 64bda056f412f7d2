"""Tests for box merging, annotator clients and the agreement pipeline"""

import json

import pytest
import requests

from src.actions import BBox
from src.annotation import (
    AnnotationPipeline,
    AnnotatorRequest,
    Checkpoint,
    DropReason,
    Highlight,
    HttpAnnotatorClient,
    PromptSet,
    ResponseParser,
    ScreenRecord,
    ToggleState,
    annotate_state_feature,
    identify_toggle,
    iou,
    load_scripted_annotators,
    merge_boxes,
    normalize_feature,
    run_pipeline,
)
from src.errors import AnnotatorError, CheckpointError, ConfigError
from src.annotation.clients import create_annotators

from .conftest import BT_BOX, WIFI_BOX

YES = 'Answer: yes'
NO = 'Answer: no'


def sf(state, feature):
    return f"State: {state}\nFeature: {feature}"


# ---------------------------------------------------------------- boxes

def test_iou():
    a = BBox(0, 0, 100, 100)
    assert iou(a, a) == 1.0
    assert iou(a, BBox(200, 200, 300, 300)) == 0.0
    assert iou(BBox(0, 0, 100, 100), BBox(0, 0, 100, 50)) == pytest.approx(0.5)


def test_merge_boxes():
    p = [BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)]
    assert merge_boxes([], p) == p
    assert merge_boxes([WIFI_BOX], [WIFI_BOX]) == [WIFI_BOX]

    half = BBox(0, 0, 100, 50)
    assert merge_boxes([BBox(0, 0, 100, 100)], [half]) == [BBox(0, 0, 100, 100), half]


def test_merge_prefers_original_box():
    near = BBox(802, 151, 958, 229)
    assert merge_boxes([WIFI_BOX], [near]) == [WIFI_BOX]


def test_merge_cutoff_validated():
    with pytest.raises(ValueError):
        merge_boxes([], [], iou_cutoff=0)


# -------------------------------------------------------------- parsing

def test_response_parser():
    parser = ResponseParser()
    assert parser.parse_identification("Answer: YES") is True
    assert parser.parse_identification("answer:no") is False
    assert parser.parse_identification("maybe") is None
    assert parser.parse_state_feature(sf('on', 'Wi-Fi')) == (ToggleState.ON, 'Wi-Fi')
    assert parser.parse_state_feature("State: on\nFeature:\nbla") is None
    assert parser.parse_state_feature("Feature: Wi-Fi") is None


def test_normalize_feature():
    assert normalize_feature("  Do  not\tDisturb ") == 'do not disturb'
    assert normalize_feature("  Wi-Fi ", strict=True) == 'Wi-Fi'


def test_prompts_render(wifi_record):
    prompts = PromptSet()
    text = prompts.render('identify', wifi_record, WIFI_BOX)
    assert '[800, 150, 960, 230]' in text
    assert 'Open network settings' in text
    assert prompts.reprompt(text).startswith(text.rstrip())


def test_prompts_missing_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        PromptSet(tmp_path)


# ------------------------------------------------------------ agreement

@pytest.mark.parametrize('g, q, expected', [
    (YES, YES, True),
    (YES, NO, False),
    (NO, NO, False),
])
def test_identify_toggle(wifi_record, scripted, g, q, expected):
    key = ('s1', WIFI_BOX)
    pair = scripted({key: {'identify': g}}, {key: {'identify': q}})
    assert identify_toggle(wifi_record, WIFI_BOX, pair) is expected


def test_state_feature_normalized_agreement(wifi_record, scripted):
    key = ('s1', WIFI_BOX)
    pair = scripted({key: {'state_feature': sf('on', 'Wi-Fi')}}, {key: {'state_feature': sf('on', 'wi-fi')}})
    quad = annotate_state_feature(wifi_record, WIFI_BOX, pair)
    assert quad.state == ToggleState.ON
    assert quad.feature == 'wi-fi'


@pytest.mark.parametrize('g, q', [
    (sf('on', 'Wi-Fi'), sf('off', 'Wi-Fi')),
    (sf('on', 'Bluetooth'), sf('on', 'Alarm')),
])
def test_state_feature_disagreement(wifi_record, scripted, g, q):
    key = ('s1', WIFI_BOX)
    pair = scripted({key: {'state_feature': g}}, {key: {'state_feature': q}})
    assert annotate_state_feature(wifi_record, WIFI_BOX, pair) is None


def test_strict_feature_match(wifi_record, scripted):
    key = ('s1', WIFI_BOX)
    pair = scripted({key: {'state_feature': sf('on', 'Wi-Fi')}}, {key: {'state_feature': sf('on', 'wi-fi')}})
    assert annotate_state_feature(wifi_record, WIFI_BOX, pair, strict_feature_match=True) is None


def test_reprompt_once_then_error(wifi_record, scripted):
    key = ('s1', WIFI_BOX)
    pair = scripted({key: {'identify': ['hmm', YES]}}, {key: {'identify': YES}})
    assert identify_toggle(wifi_record, WIFI_BOX, pair)

    pair = scripted({key: {'identify': ['hmm', 'still unsure', YES]}}, {key: {'identify': YES}})
    with pytest.raises(AnnotatorError):
        identify_toggle(wifi_record, WIFI_BOX, pair)


# ------------------------------------------------------------- pipeline

def full_agreement(scripted):
    g = {('s1', WIFI_BOX): {'identify': YES, 'state_feature': sf('on', 'Wi-Fi')},
         ('s1', BT_BOX): {'identify': YES, 'state_feature': sf('off', 'Bluetooth')}}
    q = {('s1', WIFI_BOX): {'identify': YES, 'state_feature': sf('on', 'wi-fi')},
         ('s1', BT_BOX): {'identify': NO}}
    return scripted(g, q)


def test_pipeline_one_box_full_agreement(scripted):
    record = ScreenRecord('s1', '', (1080, 2400), [WIFI_BOX])
    key = ('s1', WIFI_BOX)
    pair = scripted({key: {'identify': YES, 'state_feature': sf('on', 'Wi-Fi')}},
                    {key: {'identify': YES, 'state_feature': sf('on', 'Wi-Fi')}})
    result = run_pipeline([record], pair, show_progress=False)
    assert len(result.quadruplets) == 1
    assert result.audit.funnel() == {'boxes': 1, 'toggles': 1, 'retained': 1}


def test_pipeline_identification_disagreement(wifi_record, scripted):
    result = run_pipeline([wifi_record], full_agreement(scripted), show_progress=False)
    assert [q.feature for q in result.quadruplets] == ['wi-fi']
    reasons = {o.box: o.reason for o in result.outcomes}
    assert reasons[BT_BOX] == DropReason.IDENTIFICATION_DISAGREEMENT
    assert result.audit.is_conserved()


def test_pipeline_empty_input(scripted):
    result = run_pipeline([], scripted({}, {}), show_progress=False)
    assert result.quadruplets == []
    assert result.audit.boxes == 0 and result.audit.is_conserved()


def test_pipeline_counts_annotator_errors(wifi_record, scripted):
    g = {('s1', WIFI_BOX): {'identify': '!error'}}
    result = run_pipeline([wifi_record], scripted(g, {}), show_progress=False)
    assert result.audit.errored == 1
    assert result.audit.counts[DropReason.NOT_TOGGLE.value] == 1
    assert result.audit.is_conserved()


def test_flipping_a_verdict_never_adds_quadruplets(wifi_record, scripted):
    base = run_pipeline([wifi_record], full_agreement(scripted), show_progress=False)
    pair = full_agreement(scripted)
    pair[0].script[('s1', tuple(WIFI_BOX.to_list()))]['identify'] = NO
    flipped = run_pipeline([wifi_record], pair, show_progress=False)
    assert set(q.key for q in flipped.quadruplets) <= set(q.key for q in base.quadruplets)


def test_resume_matches_uninterrupted_run(tmp_path, wifi_record, scripted):
    records = [wifi_record, ScreenRecord('s2', '', (1080, 2400), [BBox(100, 100, 200, 180)])]

    full_ckpt = tmp_path / 'full' / 'checkpoint.jsonl'
    full = run_pipeline(records, full_agreement(scripted), checkpoint_path=full_ckpt, show_progress=False)
    full.write(tmp_path / 'full')

    lines = full_ckpt.read_text(encoding='utf-8').splitlines(keepends=True)
    partial_ckpt = tmp_path / 'resumed' / 'checkpoint.jsonl'
    partial_ckpt.parent.mkdir()
    partial_ckpt.write_text(''.join(lines[:1]), encoding='utf-8')
    resumed = run_pipeline(records, full_agreement(scripted), checkpoint_path=partial_ckpt, show_progress=False)
    resumed.write(tmp_path / 'resumed')

    for name in ('quadruplets.jsonl', 'audit.jsonl', 'audit_summary.json'):
        assert (tmp_path / 'full' / name).read_bytes() == (tmp_path / 'resumed' / name).read_bytes()


def test_corrupt_checkpoint(tmp_path):
    path = tmp_path / 'checkpoint.jsonl'
    path.write_text('{"screen_id": "s1"\n', encoding='utf-8')
    with pytest.raises(CheckpointError, match='--restart'):
        Checkpoint(path).load()
    Checkpoint(path, restart=True)
    assert not path.exists()


def test_pipeline_result_files(tmp_path, wifi_record, scripted):
    result = run_pipeline([wifi_record], full_agreement(scripted), show_progress=False)
    paths = result.write(tmp_path)
    rows = [json.loads(line) for line in paths['quadruplets'].read_text(encoding='utf-8').splitlines()]
    assert rows == [{'screen_id': 's1', 'box': [800, 150, 960, 230], 'state': 'on', 'feature': 'wi-fi',
                     'image_ref': 'images/s1.png'}]
    summary = json.loads(paths['summary'].read_text(encoding='utf-8'))
    assert summary['boxes'] == 2 and summary['counts']['retained'] == 1


def test_pipeline_needs_two_annotators(scripted):
    with pytest.raises(ValueError):
        AnnotationPipeline(scripted({}, {})[:1])


# -------------------------------------------------------------- clients

def test_load_scripted_annotators(tmp_path, wifi_record):
    path = tmp_path / 'mock.yaml'
    path.write_text(
        "annotators:\n"
        "  G:\n"
        "    - {screen_id: s1, box: [800, 150, 960, 230], identify: 'Answer: yes',"
        " state_feature: \"State: on\\nFeature: Wi-Fi\"}\n"
        "  Q:\n"
        "    - {screen_id: s1, box: [800, 150, 960, 230], identify: 'Answer: yes',"
        " state_feature: \"State: on\\nFeature: WI-FI\"}\n",
        encoding='utf-8',
    )
    pair = load_scripted_annotators(path)
    result = run_pipeline([wifi_record], pair, show_progress=False)
    assert [(q.box, q.feature) for q in result.quadruplets] == [(WIFI_BOX, 'wi-fi')]


def test_create_annotators_needs_env(monkeypatch):
    for role in ('G', 'Q'):
        monkeypatch.delenv(f"ANNOTATOR_{role}_URL", raising=False)
        monkeypatch.delenv(f"ANNOTATOR_{role}_MODEL", raising=False)
    with pytest.raises(ConfigError):
        create_annotators({})


class _Response:
    def __init__(self, payload, status=200):
        self.payload = payload
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.HTTPError(f"status {self.status}")

    def json(self):
        return self.payload


class _Session:
    def __init__(self, responses):
        self.responses = list(responses)
        self.posts = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts.append(json)
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    def head(self, url, headers=None, timeout=None):
        raise requests.ConnectionError("refused")


def _request():
    return AnnotatorRequest('s1', WIFI_BOX, 'identify', 'Is it a toggle?', 'images/s1.png', Highlight(WIFI_BOX))


def test_http_client_retries_with_backoff(monkeypatch):
    sleeps = []
    monkeypatch.setattr('src.annotation.clients.time.sleep', sleeps.append)
    session = _Session([requests.ConnectionError('reset'), _Response({}, 503),
                        _Response({'choices': [{'message': {'content': YES}}]})])
    client = HttpAnnotatorClient('G', 'http://annotator', 'model-g', max_retries=3, backoff_base=0.5,
                                 highlight_stroke='blue', session=session)
    assert client.complete(_request()) == YES
    assert sleeps == [0.5, 1.0]

    payload = session.posts[0]
    assert payload['model'] == 'model-g' and payload['temperature'] == 0
    assert payload['messages'][0]['highlight'] == {'box': [800, 150, 960, 230], 'stroke': 'blue', 'width': 4}


def test_http_client_gives_up(monkeypatch):
    monkeypatch.setattr('src.annotation.clients.time.sleep', lambda s: None)
    session = _Session([requests.Timeout('slow')] * 2)
    client = HttpAnnotatorClient('Q', 'http://annotator', 'model-q', max_retries=2, session=session)
    with pytest.raises(AnnotatorError):
        client.complete(_request())


def test_http_client_reachability():
    client = HttpAnnotatorClient('G', 'http://annotator', 'm', session=_Session([]))
    with pytest.raises(AnnotatorError):
        client.check_reachable()
