"""Tests for state-aware reasoning chains and training export"""

import json

import pytest

from src.actions import Action, ActionType, Dialect, format_action, parse_action
from src.annotation import ToggleState
from src.data import Episode, expand_all
from src.errors import ExportError
from src.star import (
    HistoryMode,
    ToggleAnnotation,
    build_chain,
    desired_state_for,
    examples_from_episode,
    examples_from_samples,
    export_training,
    group_annotations,
    refine_episode,
    synth_chains,
)

WIFI_EPISODE = {
    'episode_id': 'ep1',
    'instruction': 'Turn off Wi-Fi',
    'source': 'demo',
    'steps': [
        {'step': 0, 'action': {'type': 'OPENAPP', 'app_name': 'Settings'}, 'image_ref': 'a.png', 'reasoning': 'open'},
        {'step': 1, 'action': {'type': 'CLICK', 'point': [500, 190]}, 'image_ref': 'b.png'},
        {'step': 2, 'action': {'type': 'CLICK', 'point': [880, 190]}, 'image_ref': 'c.png'},
    ],
}


def episode(data=None):
    return Episode.from_dict(json.loads(json.dumps(data or WIFI_EPISODE)))


@pytest.mark.parametrize('current, desired, expected', [
    (ToggleState.ON, ToggleState.OFF, ActionType.CLICK),
    (ToggleState.OFF, ToggleState.ON, ActionType.CLICK),
    (ToggleState.ON, ToggleState.ON, ActionType.COMPLETED),
    (ToggleState.OFF, ToggleState.OFF, ActionType.COMPLETED),
])
def test_chain_decision_follows_states(current, desired, expected):
    action = Action.click(10, 10) if expected == ActionType.CLICK else Action.completed()
    chain = build_chain('Wi-Fi', current, desired, action)
    assert chain.final_action.type == expected
    assert 'Wi-Fi' in chain.perceive and current.value in chain.perceive
    assert desired.value in chain.analyze
    text = chain.render()
    assert text.index('Perceiving') < text.index('Analyzing') < text.index('Deciding')


def test_chain_rejects_contradicting_action():
    with pytest.raises(ValueError):
        build_chain('Wi-Fi', ToggleState.ON, ToggleState.ON, Action.click(10, 10))
    with pytest.raises(ValueError):
        build_chain('Wi-Fi', ToggleState.ON, ToggleState.OFF, Action.completed())


def test_sample_chains_end_in_label(quadruplets):
    samples = expand_all(quadruplets)
    for sample, chain in zip(samples, synth_chains(samples)):
        assert chain.final_action == sample.label_action
        assert chain.current_state == sample.toggle_state


def test_desired_state_for():
    assert desired_state_for(Action.click(1, 1), ToggleState.ON) == ToggleState.OFF
    assert desired_state_for(Action.completed(), ToggleState.ON) == ToggleState.ON
    with pytest.raises(ValueError):
        desired_state_for(Action(ActionType.SCROLL, direction='up'), ToggleState.ON)


def test_refine_without_toggle_steps_is_identity():
    ep = episode()
    assert refine_episode(ep, {}) is ep


def test_refine_changes_only_toggle_steps():
    ep = episode()
    notes = group_annotations([ToggleAnnotation.from_dict(
        {'episode_id': 'ep1', 'step': 2, 'state': 'on', 'feature': 'Wi-Fi'})])
    refined = refine_episode(ep, notes['ep1'])

    before, after = ep.to_dict(), refined.to_dict()
    assert after['source'] == 'demo'
    assert after['steps'][:2] == before['steps'][:2]
    assert after['steps'][2]['action'] == before['steps'][2]['action']
    assert 'CLICK the toggle' in after['steps'][2]['reasoning']
    assert refined.steps[2].action == ep.steps[2].action


def test_refine_picks_up_toggle_flag():
    data = json.loads(json.dumps(WIFI_EPISODE))
    data['steps'][2]['toggle'] = True
    with pytest.raises(ValueError):
        refine_episode(episode(data), {})


@pytest.mark.parametrize('note', [
    {'episode_id': 'ep1', 'step': 7, 'state': 'on', 'feature': 'Wi-Fi'},
    {'episode_id': 'ep1', 'step': 2, 'state': 'on', 'feature': ''},
    {'episode_id': 'ep1', 'step': 2, 'feature': 'Wi-Fi'},
])
def test_refine_rejects_bad_annotations(note):
    annotation = ToggleAnnotation.from_dict(note)
    with pytest.raises(ValueError):
        refine_episode(episode(), {annotation.step: annotation})


def test_export_without_history(quadruplets, tmp_path):
    examples = examples_from_samples(expand_all(quadruplets))
    path = tmp_path / 'star.jsonl'
    conversations = export_training(examples, 'canonical', 'none', path)

    assert len(path.read_text(encoding='utf-8').splitlines()) == len(examples)
    first = conversations[0]
    roles = [turn['role'] for turn in first['conversations']]
    assert roles == ['system', 'user', 'assistant']
    last_line = first['conversations'][2]['content'].splitlines()[-1]
    assert parse_action(last_line) == examples[0].final_action
    assert first['meta']['history_mode'] == 'none'


def test_text_chain_lists_previous_actions():
    examples = examples_from_episode(episode())
    assert [e.example_id for e in examples] == ['ep1:0', 'ep1:1', 'ep1:2']

    conv = export_training(examples, history_mode=HistoryMode.TEXT_CHAIN)[2]
    user = conv['conversations'][1]['content']
    assert 'Previous actions:' in user
    assert f"1. {format_action(examples[0].final_action)}" in user
    assert f"2. {format_action(examples[1].final_action)}" in user
    assert conv['images'] == ['c.png']


def test_screenshot_chain_orders_images():
    examples = examples_from_episode(episode())
    conv = export_training(examples, history_mode='screenshot-chain')[2]
    assert conv['images'] == ['a.png', 'b.png', 'c.png']
    assert conv['meta']['source'] == 'episode'


def test_function_call_export():
    conv = export_training(examples_from_episode(episode()), dialect='function-call')[0]
    assert conv['meta']['action_text'] == "open_app(name='Settings')"
    assert conv['conversations'][2]['content'] == "open\nopen_app(name='Settings')"


class _ClickOnly(Dialect):
    name = 'click-only'
    supported_types = frozenset({ActionType.CLICK, ActionType.COMPLETED})

    def _parse(self, text):
        return parse_action(text)

    def _format(self, action):
        return format_action(action)


def test_export_aborts_on_inexpressible_action(tmp_path):
    path = tmp_path / 'out.jsonl'
    with pytest.raises(ExportError) as info:
        export_training(examples_from_episode(episode()), _ClickOnly(), 'none', path)
    assert info.value.example_id == 'ep1:0'
    assert not path.exists()
