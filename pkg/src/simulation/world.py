"""
Toggle World
Layout-based device simulator: navigation graph, toggle state and step semantics
"""

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from src.actions import Action, ActionType, BBox, Point
from src.matching import openapp_match

logger = logging.getLogger(__name__)

HOME = 'home'
DEFAULT_BUDGET = 15


class WidgetKind(str, Enum):
    TOGGLE = 'toggle'
    BUTTON = 'button'
    LIST_ITEM = 'list-item'


class Termination(str, Enum):
    AGENT_COMPLETED = 'agent-completed'
    BUDGET_EXHAUSTED = 'budget-exhausted'
    PROTOCOL_ERROR = 'protocol-error'


@dataclass(frozen=True)
class Widget:
    widget_id: str
    label: str
    kind: WidgetKind
    bbox: BBox
    toggle: Optional[str] = None
    target: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', WidgetKind(self.kind))
        if (self.kind == WidgetKind.TOGGLE) != (self.toggle is not None):
            raise ValueError(f"Widget {self.widget_id}: only toggle widgets carry a toggle name")


@dataclass(frozen=True)
class Screen:
    screen_id: str
    title: str
    widgets: Tuple[Widget, ...]
    app: Optional[str] = None
    parent: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'widgets', tuple(self.widgets))
        for i, a in enumerate(self.widgets):
            for b in self.widgets[i + 1:]:
                if a.bbox.overlaps(b.bbox):
                    raise ValueError(f"Widgets {a.widget_id} and {b.widget_id} overlap on {self.screen_id}")

    def widget_at(self, point: Point) -> Optional[Widget]:
        for widget in self.widgets:
            if widget.bbox.contains(point):
                return widget
        return None


def _back(parent: str) -> Widget:
    return Widget('back', 'Back', WidgetKind.BUTTON, BBox(20, 40, 140, 110), target=parent)


def _row(i: int) -> Tuple[int, int]:
    top = 150 + i * 100
    return top, top + 80


def _list_screen(screen_id: str, title: str, parent: str, app: str,
                 items: Sequence[Tuple[str, str]] = (), toggles: Sequence[Tuple[str, str]] = ()) -> Screen:
    """Screen with a Back button, navigation rows, then toggle rows"""
    widgets = [_back(parent)]
    for i, (label, target) in enumerate(items):
        top, bottom = _row(i)
        widgets.append(Widget(f"item:{target}", label, WidgetKind.LIST_ITEM, BBox(40, top, 960, bottom), target=target))
    for j, (label, toggle) in enumerate(toggles, start=len(items)):
        top, bottom = _row(j)
        widgets.append(Widget(f"toggle:{toggle}", label, WidgetKind.TOGGLE, BBox(800, top, 960, bottom), toggle=toggle))
    return Screen(screen_id, title, tuple(widgets), app=app, parent=parent)


class NavigationGraph:
    """Screens, app entry points and where each toggle lives"""

    def __init__(self, screens: Sequence[Screen], apps: Mapping[str, str], plain_apps: Sequence[str] = ()):
        self.screens: Dict[str, Screen] = {s.screen_id: s for s in screens}
        self.apps: Dict[str, str] = dict(apps)
        self.plain_apps: List[str] = list(plain_apps)
        if HOME not in self.screens:
            raise ValueError("Navigation graph needs a home screen")

        self.toggle_screen: Dict[str, str] = {}
        self.toggle_labels: Dict[str, str] = {}
        for screen in self.screens.values():
            for w in screen.widgets:
                if w.target is not None and w.target not in self.screens:
                    raise ValueError(f"{screen.screen_id}:{w.widget_id} points to unknown screen {w.target}")
                if w.toggle is not None:
                    if w.toggle in self.toggle_screen:
                        raise ValueError(f"Toggle {w.toggle} appears on more than one screen")
                    self.toggle_screen[w.toggle] = screen.screen_id
                    self.toggle_labels[w.toggle] = w.label
        for app, root in self.apps.items():
            if root not in self.screens:
                raise ValueError(f"App {app} points to unknown screen {root}")

    @property
    def toggles(self) -> List[str]:
        return sorted(self.toggle_screen)

    def screen(self, screen_id: str) -> Screen:
        return self.screens[screen_id]

    def find_app(self, name: str) -> Optional[str]:
        """Registered app name matching ``name`` under the OPENAPP rule"""
        for app in sorted(self.apps):
            if openapp_match(app, name):
                return app
        return None

    def _moves(self, screen_id: str) -> List[Tuple[Action, str]]:
        screen = self.screens[screen_id]
        moves = []
        for w in screen.widgets:
            if w.target is not None:
                c = w.bbox.center
                moves.append((Action.click(c.x, c.y), w.target))
        if screen.parent is not None:
            moves.append((Action(ActionType.PRESS), screen.parent))
        return moves

    def next_hop(self, src: str, dst: str) -> Optional[Action]:
        """First action on a shortest click/back path from src to dst"""
        if src == dst:
            return None
        first: Dict[str, Action] = {}
        queue = deque([src])
        seen = {src}
        while queue:
            node = queue.popleft()
            for action, nxt in self._moves(node):
                if nxt in seen:
                    continue
                seen.add(nxt)
                first[nxt] = first.get(node, action)
                if nxt == dst:
                    return first[nxt]
                queue.append(nxt)
        return None


def build_default_graph() -> NavigationGraph:
    """Home, system settings, Clock, Chrome, YouTube and a few plain apps"""
    plain_apps = ['Calculator', 'Calendar', 'Camera', 'Contacts', 'Files', 'Gallery', 'Maps', 'Recorder']
    app_roots = {
        'Settings': 'settings',
        'Clock': 'clock',
        'Chrome': 'chrome',
        'YouTube': 'youtube',
    }
    app_roots.update({name: f"app:{name.lower()}" for name in plain_apps})

    icons = []
    for i, (name, root) in enumerate(app_roots.items()):
        row, col = divmod(i, 4)
        x, y = 40 + col * 240, 200 + row * 260
        icons.append(Widget(f"app:{name.lower()}", name, WidgetKind.LIST_ITEM, BBox(x, y, x + 200, y + 200),
                            target=root))

    screens = [
        Screen(HOME, 'Home', tuple(icons)),
        _list_screen('settings', 'Settings', HOME, 'Settings', items=[
            ('Network & internet', 'network'),
            ('Connected devices', 'connected'),
            ('Sound', 'sound'),
        ]),
        _list_screen('network', 'Network & internet', 'settings', 'Settings', toggles=[('Wi-Fi', 'wifi')]),
        _list_screen('connected', 'Connected devices', 'settings', 'Settings', toggles=[('Bluetooth', 'bluetooth')]),
        _list_screen('sound', 'Sound', 'settings', 'Settings', toggles=[('Do not disturb', 'dnd')]),
        _list_screen('clock', 'Alarms', HOME, 'Clock', toggles=[
            ('7:30 AM alarm', 'alarm_730am'),
            ('9:00 AM alarm', 'alarm_9am'),
        ]),
        _list_screen('chrome', 'Chrome', HOME, 'Chrome', items=[('Settings', 'chrome_settings')]),
        _list_screen('chrome_settings', 'Chrome settings', 'chrome', 'Chrome', items=[
            ('Payment methods', 'chrome_payment'),
            ('Privacy and security', 'chrome_privacy'),
        ]),
        _list_screen('chrome_payment', 'Payment methods', 'chrome_settings', 'Chrome',
                     toggles=[('Save and fill payment methods', 'chrome_payment')]),
        _list_screen('chrome_privacy', 'Privacy and security', 'chrome_settings', 'Chrome',
                     toggles=[('Always use secure connections', 'chrome_secure')]),
        _list_screen('youtube', 'YouTube', HOME, 'YouTube', items=[('Settings', 'youtube_settings')]),
        _list_screen('youtube_settings', 'YouTube settings', 'youtube', 'YouTube',
                     items=[('Captions', 'youtube_captions')]),
        _list_screen('youtube_captions', 'Captions', 'youtube_settings', 'YouTube',
                     toggles=[('Show captions', 'captions')]),
    ]
    screens += [_list_screen(f"app:{name.lower()}", name, HOME, name) for name in plain_apps]
    return NavigationGraph(screens, app_roots, plain_apps)


@dataclass(frozen=True)
class WorldState:
    """Simulated device state; transitions return new instances"""
    toggles: Dict[str, bool]
    current_screen: str = HOME
    opened_app: Optional[str] = None
    step_count: int = 0
    done: bool = False
    termination: Optional[Termination] = None
    instruction: str = field(default='', compare=False)


@dataclass(frozen=True)
class Observation:
    screen_id: str
    title: str
    widgets: Tuple[Dict[str, Any], ...]
    instruction: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            'screen_id': self.screen_id,
            'title': self.title,
            'widgets': [dict(w) for w in self.widgets],
            'instruction': self.instruction,
        }

    def layout(self) -> List[BBox]:
        return [BBox.from_list(w['bbox']) for w in self.widgets]


class ToggleWorld:
    """
    Deterministic environment over a navigation graph

    CLICK flips toggles or follows navigation widgets, OPENAPP jumps to an
    app, PRESS goes back, COMPLETED ends the episode. SCROLL, TYPE, OTHER and
    clicks on empty space consume a step without effect.
    """

    def __init__(self, graph: Optional[NavigationGraph] = None, budget: int = DEFAULT_BUDGET):
        if budget < 1:
            raise ValueError(f"Step budget must be positive, got {budget}")
        self.graph = graph or build_default_graph()
        self.budget = budget

    def initial_state(self, toggles: Mapping[str, bool], instruction: str = '') -> WorldState:
        unknown = set(toggles) - set(self.graph.toggle_screen)
        if unknown:
            raise ValueError(f"Unknown toggles: {sorted(unknown)}")
        missing = set(self.graph.toggle_screen) - set(toggles)
        if missing:
            raise ValueError(f"Initial state does not set toggles: {sorted(missing)}")
        return WorldState(dict(toggles), instruction=instruction)

    def reset(self, task, seed: int = 0) -> Tuple[WorldState, Observation]:
        """Initial state and home-screen observation; templated tasks are resolved with ``seed``"""
        task = task.instantiate(seed, self.graph)
        state = self.initial_state(task.initial_state, task.instruction)
        return state, self.observe(state)

    def observe(self, state: WorldState) -> Observation:
        screen = self.graph.screen(state.current_screen)
        widgets = []
        for w in screen.widgets:
            widgets.append({
                'id': w.widget_id,
                'bbox': w.bbox.to_list(),
                'label': w.label,
                'kind': w.kind.value,
                'state': ('on' if state.toggles[w.toggle] else 'off') if w.toggle else None,
            })
        return Observation(screen.screen_id, screen.title, tuple(widgets), state.instruction)

    def check_fidelity(self, state: WorldState, obs: Observation) -> None:
        """Rendered toggle states must mirror the world state"""
        screen = self.graph.screen(state.current_screen)
        if obs.screen_id != screen.screen_id:
            raise AssertionError(f"Observation shows {obs.screen_id}, world is on {screen.screen_id}")
        for w, shown in zip(screen.widgets, obs.widgets):
            if w.toggle is not None and shown['state'] != ('on' if state.toggles[w.toggle] else 'off'):
                raise AssertionError(f"Toggle {w.toggle} rendered {shown['state']} but is {state.toggles[w.toggle]}")

    def _goto(self, state: WorldState, screen_id: str) -> WorldState:
        return replace(state, current_screen=screen_id, opened_app=self.graph.screen(screen_id).app)

    def _apply(self, state: WorldState, action: Action) -> WorldState:
        screen = self.graph.screen(state.current_screen)
        t = action.type

        if t == ActionType.COMPLETED:
            return replace(state, done=True, termination=Termination.AGENT_COMPLETED)
        if t == ActionType.CLICK:
            widget = screen.widget_at(action.point)
            if widget is None:
                logger.debug("Click %s hit nothing on %s", action.point.to_list(), screen.screen_id)
                return state
            if widget.toggle is not None:
                toggles = dict(state.toggles)
                toggles[widget.toggle] = not toggles[widget.toggle]
                return replace(state, toggles=toggles)
            if widget.target is not None:
                return self._goto(state, widget.target)
            return state
        if t == ActionType.OPENAPP:
            app = self.graph.find_app(action.app_name)
            if app is None:
                logger.debug("OPENAPP %r matched no app", action.app_name)
                return state
            return self._goto(state, self.graph.apps[app])
        if t == ActionType.PRESS:
            if screen.parent is None:
                return state
            return self._goto(state, screen.parent)
        return state

    def step(self, state: WorldState, action: Action) -> Tuple[WorldState, Observation, bool]:
        if state.done:
            raise ValueError("Episode already finished; call reset")
        new = self._apply(state, action)
        new = replace(new, step_count=state.step_count + 1)
        if not new.done and new.step_count >= self.budget:
            new = replace(new, done=True, termination=Termination.BUDGET_EXHAUSTED)
        obs = self.observe(new)
        self.check_fidelity(new, obs)
        return new, obs, new.done
