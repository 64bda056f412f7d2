"""
Agent Adapters
Scripted reference agents and transports for driving external agents
"""

import json
import logging
import queue
import shlex
import subprocess
import threading
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Union

import requests

from src.actions import Action, ActionType, BBox, Dialect, format_action, get_dialect
from src.errors import AgentSpawnError, ProtocolError
from src.simulation.world import NavigationGraph, build_default_graph

logger = logging.getLogger(__name__)


class AgentAdapter(ABC):
    """
    One agent under evaluation

    ``act`` receives ``{"observation", "instruction", "history"}`` and returns
    the agent's raw action string.
    """

    name = 'agent'

    def start(self) -> None:
        """Acquire the agent; raise AgentSpawnError when it cannot be reached"""

    def begin_episode(self, task) -> None:
        """Called with the resolved task before the first observation"""

    @abstractmethod
    def act(self, request: Dict[str, Any]) -> str:
        pass

    def fork(self) -> 'AgentAdapter':
        """Independent instance for running another episode in parallel"""
        return self

    def close(self) -> None:
        pass

    def __enter__(self) -> 'AgentAdapter':
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class ScriptedAgent(AgentAdapter):
    """
    Reference policy built from task definitions

    Navigates to each target toggle along a shortest path, reads its state
    from the observation and clicks only when it differs from the goal. With
    ``always_toggle`` it clicks every target once regardless of state.
    """

    def __init__(self, graph: Optional[NavigationGraph] = None, always_toggle: bool = False,
                 dialect: Union[str, Dialect] = 'canonical'):
        self.graph = graph or build_default_graph()
        self.always_toggle = always_toggle
        self.dialect = get_dialect(dialect)
        self.name = 'always-toggle' if always_toggle else 'optimal'
        self.goals: List[Any] = []

    def begin_episode(self, task) -> None:
        self.goals = list(task.subtask_checkers)

    def fork(self) -> 'ScriptedAgent':
        return ScriptedAgent(self.graph, self.always_toggle, self.dialect)

    def decide(self, observation: Dict[str, Any]) -> Action:
        screen = observation['screen_id']
        while self.goals:
            goal = self.goals[0]
            if goal.kind == 'app_opened':
                self.goals.pop(0)
                return Action(ActionType.OPENAPP, app_name=goal.target)

            target_screen = self.graph.toggle_screen[goal.target]
            if screen != target_screen:
                hop = self.graph.next_hop(screen, target_screen)
                if hop is None:
                    raise ProtocolError(f"No path from {screen} to {target_screen}")
                return hop

            widget = next(w for w in observation['widgets'] if w['id'] == f"toggle:{goal.target}")
            self.goals.pop(0)
            if self.always_toggle or (widget['state'] == 'on') != goal.expect:
                c = BBox.from_list(widget['bbox']).center
                return Action.click(c.x, c.y)
        return Action.completed()

    def act(self, request: Dict[str, Any]) -> str:
        return format_action(self.decide(request['observation']), self.dialect)


class OptimalAgent(ScriptedAgent):
    def __init__(self, graph: Optional[NavigationGraph] = None, dialect: Union[str, Dialect] = 'canonical'):
        super().__init__(graph, always_toggle=False, dialect=dialect)


class AlwaysToggleAgent(ScriptedAgent):
    def __init__(self, graph: Optional[NavigationGraph] = None, dialect: Union[str, Dialect] = 'canonical'):
        super().__init__(graph, always_toggle=True, dialect=dialect)


def _action_from_reply(reply: Dict[str, Any]) -> str:
    if not isinstance(reply, dict) or not isinstance(reply.get('action'), str):
        raise ProtocolError(f"Agent reply must be an object with a string 'action': {str(reply)[:200]}")
    return reply['action']


class SubprocessAgent(AgentAdapter):
    """
    Agent process speaking line-delimited JSON over stdin/stdout

    Replies are read on a daemon thread into a queue, so several lines written
    in one flush are each available to the following ``act`` calls.
    """

    def __init__(self, command: Sequence[str], timeout: float = 30.0):
        self.command = list(command)
        self.timeout = timeout
        self.name = self.command[0] if self.command else 'subprocess'
        self.proc: Optional[subprocess.Popen] = None
        self.replies: 'queue.Queue[Optional[str]]' = queue.Queue()

    def start(self) -> None:
        if self.proc is not None:
            return
        try:
            self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         text=True, bufsize=1)
        except (OSError, ValueError) as e:
            raise AgentSpawnError(f"Could not start agent {self.command}: {e}")
        if self.proc.poll() is not None:
            raise AgentSpawnError(f"Agent {self.command} exited immediately with code {self.proc.returncode}")
        self.replies = queue.Queue()
        threading.Thread(target=self._read_replies, args=(self.proc.stdout, self.replies),
                         name=f"agent-reader-{self.proc.pid}", daemon=True).start()
        logger.info("Started agent process %s (pid %d)", self.command, self.proc.pid)

    @staticmethod
    def _read_replies(stream, replies: 'queue.Queue[Optional[str]]') -> None:
        try:
            for line in stream:
                replies.put(line)
        except (OSError, ValueError):
            pass
        # None marks end of output
        replies.put(None)

    def act(self, request: Dict[str, Any]) -> str:
        self.start()
        try:
            self.proc.stdin.write(json.dumps(request, sort_keys=True) + '\n')
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProtocolError(f"Agent process closed its input: {e}")

        try:
            line = self.replies.get(timeout=self.timeout)
        except queue.Empty:
            raise ProtocolError(f"Agent did not answer within {self.timeout}s")
        if line is None:
            self.replies.put(None)
            raise ProtocolError("Agent process closed its output")
        try:
            return _action_from_reply(json.loads(line))
        except json.JSONDecodeError:
            raise ProtocolError(f"Agent reply is not JSON: {line[:200]!r}")

    def fork(self) -> 'SubprocessAgent':
        return SubprocessAgent(self.command, self.timeout)

    def close(self) -> None:
        if self.proc is None:
            return
        try:
            self.proc.stdin.close()
            self.proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            self.proc.kill()
        self.proc = None


class HttpAgent(AgentAdapter):
    """Agent behind an HTTP endpoint; one POST per step"""

    def __init__(self, url: str, timeout: float = 30.0, session: Optional[requests.Session] = None):
        self.url = url
        self.timeout = timeout
        self.name = url
        self.session = session or requests.Session()

    def start(self) -> None:
        try:
            self.session.head(self.url, timeout=min(self.timeout, 10.0))
        except requests.RequestException as e:
            raise AgentSpawnError(f"Agent endpoint {self.url} unreachable: {e}")

    def act(self, request: Dict[str, Any]) -> str:
        try:
            response = self.session.post(self.url, json=request, timeout=self.timeout)
            response.raise_for_status()
            return _action_from_reply(response.json())
        except (requests.RequestException, ValueError) as e:
            raise ProtocolError(f"Agent endpoint {self.url} failed: {e}")

    def fork(self) -> 'HttpAgent':
        return HttpAgent(self.url, self.timeout)


SCRIPTED_AGENTS = {
    'optimal': OptimalAgent,
    'always-toggle': AlwaysToggleAgent,
}


def create_agent(agent_spec: str, graph: Optional[NavigationGraph] = None,
                 dialect: Union[str, Dialect] = 'canonical', timeout: float = 30.0) -> AgentAdapter:
    """
    Agent from the --agent value: ``optimal``, ``always-toggle``, an http(s) URL or
    a command line to spawn
    """
    if agent_spec in SCRIPTED_AGENTS:
        return SCRIPTED_AGENTS[agent_spec](graph, dialect=dialect)
    if agent_spec.startswith(('http://', 'https://')):
        return HttpAgent(agent_spec, timeout)
    command = shlex.split(agent_spec)
    if not command:
        raise AgentSpawnError("Empty agent command")
    return SubprocessAgent(command, timeout)
