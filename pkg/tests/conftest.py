"""Shared fixtures"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.actions import Action, BBox  # noqa: E402
from src.annotation import ScreenRecord, ScriptedAnnotatorClient, ToggleQuadruplet, ToggleState, box_key  # noqa: E402
from src.simulation import TaskRegistry, ToggleWorld  # noqa: E402

WIFI_BOX = BBox(800, 150, 960, 230)
BT_BOX = BBox(800, 250, 960, 330)


@pytest.fixture
def wifi_record():
    return ScreenRecord(
        screen_id='s1',
        image_ref='images/s1.png',
        screen_dims=(1080, 2400),
        original_boxes=[WIFI_BOX, BT_BOX],
        parsed_boxes=[],
        source_instruction='Open network settings',
    )


def scripted_pair(entries_g, entries_q):
    """Two scripted annotators from {(screen_id, box): {stage: response}} mappings"""
    def build(role, entries):
        script = {box_key(sid, box): stages for (sid, box), stages in entries.items()}
        return ScriptedAnnotatorClient(role, script)
    return build('G', entries_g), build('Q', entries_q)


@pytest.fixture
def quadruplets():
    return [
        ToggleQuadruplet('s1', WIFI_BOX, ToggleState.ON, 'wi-fi'),
        ToggleQuadruplet('s1', BT_BOX, ToggleState.OFF, 'bluetooth'),
        ToggleQuadruplet('s2', BBox(100, 100, 200, 180), ToggleState.ON, 'do not disturb'),
    ]


@pytest.fixture(scope='session')
def registry():
    return TaskRegistry()


@pytest.fixture
def world(registry):
    return ToggleWorld(registry.graph)


@pytest.fixture
def click_at():
    def make(box: BBox) -> Action:
        c = box.center
        return Action.click(c.x, c.y)
    return make


@pytest.fixture
def scripted():
    return scripted_pair
