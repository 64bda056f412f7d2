"""Tests for the toggle world, dynamic tasks and the suite runner"""

import json
import sys
from dataclasses import replace

import pytest

from src.actions import Action, ActionType
from src.errors import AgentSpawnError, ConfigError, ProtocolError, UnknownTaskError
from src.inference import AlwaysToggleAgent, OptimalAgent, SubprocessAgent, create_agent
from src.simulation import TaskRegistry, Termination, ToggleWorld, run_episode, run_suite, score_episode


class EchoAgent:
    """Replays fixed raw outputs, then keeps answering COMPLETED"""

    name = 'echo'

    def __init__(self, *outputs):
        self.outputs = list(outputs)
        self.requests = []

    def begin_episode(self, task):
        pass

    def act(self, request):
        self.requests.append(request)
        return self.outputs.pop(0) if self.outputs else 'COMPLETED'

    def fork(self):
        return self

    def close(self):
        pass


def test_registry_has_twenty_tasks(registry):
    assert len(registry) == 20
    assert sum(t.verify for t in registry) == 4


@pytest.mark.parametrize('task_id, toggle, start', [
    ('SystemWifiTurnOn', 'wifi', False),
    ('SystemWifiTurnOnVerify', 'wifi', True),
    ('SystemBluetoothTurnOff', 'bluetooth', True),
    ('SystemBluetoothTurnOffVerify', 'bluetooth', False),
    ('TurnOnAlarm9AM', 'alarm_9am', False),
])
def test_initial_state(registry, world, task_id, toggle, start):
    state, obs = world.reset(registry.get(task_id))
    assert state.toggles[toggle] is start
    assert state.current_screen == 'home' and obs.screen_id == 'home'
    assert state.step_count == 0 and not state.done


def test_reset_is_deterministic(registry, world):
    task = registry.get('TurnOnWifiAndOpenApp')
    a, _ = world.reset(task, seed=7)
    b, _ = world.reset(task, seed=7)
    assert a == b and a.instruction == b.instruction
    assert '{app_name}' not in a.instruction


def _goto_network(world, state):
    for _ in range(5):
        if state.current_screen == 'network':
            return state
        hop = world.graph.next_hop(state.current_screen, 'network')
        state, _, _ = world.step(state, hop)
    raise AssertionError('network screen not reached')


def test_click_flips_and_double_click_restores(registry, world, click_at):
    state, _ = world.reset(registry.get('SystemWifiTurnOff'))
    state = _goto_network(world, state)
    box = next(w.bbox for w in world.graph.screen('network').widgets if w.toggle == 'wifi')

    before = state.toggles['wifi']
    state, obs, _ = world.step(state, click_at(box))
    assert state.toggles['wifi'] is not before
    shown = next(w for w in obs.widgets if w['id'] == 'toggle:wifi')
    assert shown['state'] == ('on' if state.toggles['wifi'] else 'off')

    state, _, _ = world.step(state, click_at(box))
    assert state.toggles['wifi'] is before


def test_completed_ends_episode(registry, world):
    state, _ = world.reset(registry.get('SystemWifiTurnOnVerify'))
    state, _, done = world.step(state, Action.completed())
    assert done and state.termination == Termination.AGENT_COMPLETED
    with pytest.raises(ValueError):
        world.step(state, Action.completed())


def test_noop_actions_consume_steps(registry, world):
    state, _ = world.reset(registry.get('SystemWifiTurnOn'))
    for action in (Action(ActionType.SCROLL, direction='down'), Action.click(999, 5), Action.other('WAIT')):
        state, _, done = world.step(state, action)
        assert not done
    assert state.step_count == 3
    assert state.current_screen == 'home'


def test_budget_exhaustion(registry):
    world = ToggleWorld(registry.graph, budget=3)
    state, _ = world.reset(registry.get('SystemWifiTurnOn'))
    for _ in range(3):
        state, _, done = world.step(state, Action(ActionType.SCROLL, direction='up'))
    assert done and state.termination == Termination.BUDGET_EXHAUSTED
    with pytest.raises(ValueError):
        ToggleWorld(registry.graph, budget=0)


def test_partial_credit(registry, world):
    task = registry.get('TurnOffWifiAndTurnOnBluetooth')
    state, _ = world.reset(task)
    half = replace(state, toggles={**state.toggles, 'wifi': False})
    score = score_episode(task, half)
    assert score.success_ratio == 0.5
    assert score.satisfied == [True, False]

    done = replace(half, toggles={**half.toggles, 'bluetooth': True})
    assert score_episode(task, done).success_ratio == 1.0


def test_optimal_agent_solves_suite(registry):
    report = run_suite(OptimalAgent(registry.graph), registry.select(), show_progress=False)
    assert report.summary == '100_{20/20}'
    assert all(r.termination == Termination.AGENT_COMPLETED for r in report.results)
    assert [r.task_id for r in report.results] == registry.ids


def test_always_toggle_fails_verify_tasks(registry):
    report = run_suite(AlwaysToggleAgent(registry.graph), registry.select(), show_progress=False)
    scores = report.by_task()
    for task in registry:
        assert scores[task.task_id] == (0.0 if task.verify else 1.0)
    assert report.summary == '80_{16/20}'


def test_parallel_suite_keeps_order(registry):
    tasks = registry.select(['SystemWifiTurnOn', 'TurnOnDoNotDisturb', 'SystemBluetoothTurnOnVerify'])
    serial = run_suite(OptimalAgent(registry.graph), tasks, show_progress=False)
    parallel = run_suite(OptimalAgent(registry.graph), tasks, n_jobs=2, show_progress=False)
    assert serial.by_task() == parallel.by_task()
    assert [r.task_id for r in parallel.results] == [t.task_id for t in tasks]


def test_task_selection(registry):
    assert [t.task_id for t in registry.select(['SystemWifiTurnOn'])] == ['SystemWifiTurnOn']
    with pytest.raises(UnknownTaskError) as info:
        registry.select(['SystemWifiTurnOn', 'NoSuchTask'])
    assert 'SystemWifiTurnOn' in info.value.registered


def test_verify_task_must_start_done(tmp_path):
    path = tmp_path / 'tasks.yaml'
    path.write_text(
        'defaults: {wifi: true, bluetooth: false, dnd: false, captions: false, alarm_730am: true,\n'
        '           alarm_9am: false, chrome_payment: true, chrome_secure: false}\n'
        'tasks:\n'
        '  - task_id: Broken\n'
        '    instruction: "Turn wifi on."\n'
        '    verify: true\n'
        '    initial: {wifi: false}\n'
        '    subtasks: [{toggle: wifi, expect: true}]\n',
        encoding='utf-8',
    )
    with pytest.raises(ConfigError):
        TaskRegistry(path)


def test_unparseable_action_is_reasked(registry, world):
    agent = EchoAgent('CLICK here please', 'COMPLETED')
    result = run_episode(agent, registry.get('SystemWifiTurnOnVerify'), world)
    assert result.termination == Termination.AGENT_COMPLETED
    assert result.success_ratio == 1.0
    assert 'error' in agent.requests[1]


def test_repeated_parse_failure_is_protocol_error(registry, world):
    agent = EchoAgent('CLICK here', 'CLICK there')
    result = run_episode(agent, registry.get('SystemWifiTurnOnVerify'), world)
    assert result.termination == Termination.PROTOCOL_ERROR
    assert result.steps_taken == 0
    assert result.success_ratio == 1.0


def test_history_is_passed_to_agent(registry, world):
    agent = EchoAgent('SCROLL down', 'COMPLETED')
    run_episode(agent, registry.get('SystemWifiTurnOn'), world)
    assert agent.requests[0]['history'] == []
    assert agent.requests[1]['history'] == ['SCROLL down']
    assert agent.requests[1]['instruction'] == 'Turn wifi on.'


def test_suite_report_files(registry, tmp_path):
    report = run_suite(OptimalAgent(registry.graph), registry.select(['SystemWifiTurnOff']), show_progress=False)
    summary = json.loads(report.write(tmp_path).read_text(encoding='utf-8'))
    assert summary['summary'] == '100_{1/1}'
    transcript = json.loads((tmp_path / 'transcripts' / 'SystemWifiTurnOff.json').read_text(encoding='utf-8'))
    assert transcript['transcript'][-1]['action']['type'] == 'COMPLETED'


AGENT_SCRIPT = (
    "import json, sys\n"
    "for line in sys.stdin:\n"
    "    json.loads(line)\n"
    "    print(json.dumps({'action': 'COMPLETED'}), flush=True)\n"
)


def test_subprocess_agent(registry, world):
    agent = SubprocessAgent([sys.executable, '-c', AGENT_SCRIPT], timeout=10)
    with agent:
        result = run_episode(agent, registry.get('SystemBluetoothTurnOnVerify'), world)
    assert result.termination == Termination.AGENT_COMPLETED
    assert result.success_ratio == 1.0


def test_subprocess_agent_bad_reply(registry, world):
    agent = SubprocessAgent([sys.executable, '-c', "import sys\nfor line in sys.stdin: print('hello', flush=True)"],
                            timeout=10)
    with agent:
        result = run_episode(agent, registry.get('SystemWifiTurnOn'), world)
    assert result.termination == Termination.PROTOCOL_ERROR
    assert result.success_ratio == 0.0


def test_missing_agent_command():
    agent = create_agent('definitely-not-an-agent-binary --flag')
    with pytest.raises(AgentSpawnError):
        agent.start()


BURST_SCRIPT = (
    "import json, sys\n"
    "sys.stdin.readline()\n"
    "sys.stdout.write(json.dumps({'action': 'SCROLL down'}) + '\\n' + json.dumps({'action': 'COMPLETED'}) + '\\n')\n"
    "sys.stdout.flush()\n"
    "for line in sys.stdin:\n"
    "    pass\n"
)


def test_subprocess_agent_reads_replies_sent_in_one_flush():
    agent = SubprocessAgent([sys.executable, '-c', BURST_SCRIPT], timeout=5)
    request = {'observation': {}, 'instruction': 'Turn wifi on.', 'history': []}
    with agent:
        assert agent.act(request) == 'SCROLL down'
        assert agent.act(request) == 'COMPLETED'


def test_subprocess_agent_reports_closed_output():
    agent = SubprocessAgent([sys.executable, '-c', "import sys\nsys.stdin.readline()"], timeout=5)
    with agent:
        with pytest.raises(ProtocolError):
            agent.act({'observation': {}, 'instruction': '', 'history': []})
