"""
Action Dialects
Parsers and formatters between agent output strings and canonical actions
"""

import ast
import json
import re
import warnings
from abc import ABC, abstractmethod
from typing import Dict, FrozenSet, List, Union

from src.errors import ActionParseError, ConfigError, UnsupportedActionError
from .types import Action, ActionType, Direction, Point

ALL_TYPES: FrozenSet[ActionType] = frozenset(ActionType)


def _as_text(raw: Union[str, bytes]) -> str:
    if isinstance(raw, bytes):
        return raw.decode('utf-8', errors='replace')
    return raw


class Dialect(ABC):
    """A named parse/format rule set for one agent output format"""

    name: str = ''
    grammar: str = ''
    supported_types: FrozenSet[ActionType] = ALL_TYPES

    def parse(self, raw: Union[str, bytes]) -> Action:
        text = _as_text(raw)
        try:
            return self._parse(text)
        except ActionParseError:
            raise
        except (ValueError, TypeError) as e:
            # Slot validation (e.g. coordinates outside [0, 1000] or of the wrong type)
            raise ActionParseError(str(e), raw=text, offset=0, dialect=self.name) from e
        except RecursionError as e:
            raise ActionParseError("input nested too deeply", raw=text, offset=0, dialect=self.name) from e

    def format(self, action: Action) -> str:
        if action.type not in self.supported_types:
            raise UnsupportedActionError(f"Dialect '{self.name}' cannot express {action.type.value}")
        return self._format(action)

    @abstractmethod
    def _parse(self, text: str) -> Action:
        ...

    @abstractmethod
    def _format(self, action: Action) -> str:
        ...

    def _error(self, message: str, text: str, offset: int) -> ActionParseError:
        return ActionParseError(message, raw=text, offset=offset, dialect=self.name)


class CanonicalDialect(Dialect):
    """
    Canonical grammar

        CLICK <point>[[x,y]]</point>
        COMPLETED
        SCROLL up|down|left|right
        TYPE <text>...</text>
        OPENAPP <app>...</app>
        PRESS [key]
        <VERB> ...            -> OTHER (unknown verb, raw kept)
    """

    name = 'canonical'
    grammar = 'verb-args-v1'

    VERB_RE = re.compile(r'\s*([A-Za-z_]+)')
    CLICK_RE = re.compile(r'\s*<point>\s*\[\[\s*(\d+)\s*,\s*(\d+)\s*\]\]\s*</point>\s*$')
    SCROLL_RE = re.compile(r'\s*(up|down|left|right)\s*$', re.IGNORECASE)
    TYPE_RE = re.compile(r'\s*<text>(.*)</text>\s*$', re.DOTALL)
    APP_RE = re.compile(r'\s*<app>(.*)</app>\s*$', re.DOTALL)
    PRESS_RE = re.compile(r'\s*([A-Za-z_]+)?\s*$')
    BARE_RE = re.compile(r'\s*$')

    def _parse(self, text: str) -> Action:
        verb_match = self.VERB_RE.match(text)
        if not verb_match:
            offset = len(text) - len(text.lstrip())
            raise self._error("expected an action verb", text, offset)

        verb = verb_match.group(1).upper()
        start = verb_match.end()
        rest = text[start:]

        if verb == 'CLICK':
            m = self.CLICK_RE.match(rest)
            if not m:
                raise self._error("expected <point>[[x,y]]</point>", text, start)
            return Action(ActionType.CLICK, point=Point(int(m.group(1)), int(m.group(2))), raw=text)
        if verb == 'COMPLETED':
            if not self.BARE_RE.match(rest):
                raise self._error("COMPLETED takes no arguments", text, start)
            return Action(ActionType.COMPLETED, raw=text)
        if verb == 'SCROLL':
            m = self.SCROLL_RE.match(rest)
            if not m:
                raise self._error("expected a scroll direction", text, start)
            return Action(ActionType.SCROLL, direction=Direction(m.group(1).lower()), raw=text)
        if verb == 'TYPE':
            m = self.TYPE_RE.match(rest)
            if not m:
                raise self._error("expected <text>...</text>", text, start)
            return Action(ActionType.TYPE, text=m.group(1), raw=text)
        if verb == 'OPENAPP':
            m = self.APP_RE.match(rest)
            if not m:
                raise self._error("expected <app>...</app>", text, start)
            return Action(ActionType.OPENAPP, app_name=m.group(1), raw=text)
        if verb == 'PRESS':
            if not self.PRESS_RE.match(rest):
                raise self._error("PRESS takes at most one key name", text, start)
            return Action(ActionType.PRESS, raw=text)

        return Action.other(text)

    def _format(self, action: Action) -> str:
        t = action.type
        if t == ActionType.CLICK:
            return f"CLICK <point>[[{action.point.x},{action.point.y}]]</point>"
        if t == ActionType.SCROLL:
            return f"SCROLL {action.direction.value}"
        if t == ActionType.TYPE:
            return f"TYPE <text>{action.text}</text>"
        if t == ActionType.OPENAPP:
            return f"OPENAPP <app>{action.app_name}</app>"
        if t == ActionType.OTHER:
            return _other_verb(action, self)
        return t.value


def _other_verb(action: Action, dialect: Dialect) -> str:
    """Re-emit an OTHER action so it parses back to OTHER"""
    raw = action.raw.strip()
    if raw:
        try:
            if dialect.parse(raw).type == ActionType.OTHER:
                return raw
        except ActionParseError:
            pass
    return 'OTHER'


class FunctionCallDialect(Dialect):
    """
    Python call syntax, in the style of function-calling agents

        click(x=500, y=300)   finished()   scroll(direction='up')
        type(text='hello')    open_app(name='Chrome')   press()
    """

    name = 'function-call'
    grammar = 'python-call-v1'

    NAMES = {
        'click': ActionType.CLICK,
        'finished': ActionType.COMPLETED,
        'scroll': ActionType.SCROLL,
        'type': ActionType.TYPE,
        'open_app': ActionType.OPENAPP,
        'press': ActionType.PRESS,
    }

    def _parse(self, text: str) -> Action:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter('ignore', SyntaxWarning)
                tree = ast.parse(text.strip(), mode='eval')
        except SyntaxError as e:
            raise self._error(f"not a call expression: {e.msg}", text, max((e.offset or 1) - 1, 0)) from e

        call = tree.body
        if not isinstance(call, ast.Call) or not isinstance(call.func, ast.Name) or call.args:
            raise self._error("expected name(keyword=value, ...)", text, 0)

        try:
            kwargs = {kw.arg: ast.literal_eval(kw.value) for kw in call.keywords}
        except (ValueError, TypeError, SyntaxError) as e:
            raise self._error("keyword values must be literals", text, 0) from e

        action_type = self.NAMES.get(call.func.id)
        if action_type is None:
            return Action.other(text)
        if action_type == ActionType.CLICK:
            return Action(ActionType.CLICK, point=Point(kwargs.get('x'), kwargs.get('y')), raw=text)
        if action_type == ActionType.SCROLL:
            return Action(ActionType.SCROLL, direction=kwargs.get('direction'), raw=text)
        if action_type == ActionType.TYPE:
            return Action(ActionType.TYPE, text=kwargs.get('text'), raw=text)
        if action_type == ActionType.OPENAPP:
            return Action(ActionType.OPENAPP, app_name=kwargs.get('name'), raw=text)
        return Action(action_type, raw=text)

    def _format(self, action: Action) -> str:
        t = action.type
        if t == ActionType.CLICK:
            return f"click(x={action.point.x}, y={action.point.y})"
        if t == ActionType.COMPLETED:
            return "finished()"
        if t == ActionType.SCROLL:
            return f"scroll(direction={action.direction.value!r})"
        if t == ActionType.TYPE:
            return f"type(text={action.text!r})"
        if t == ActionType.OPENAPP:
            return f"open_app(name={action.app_name!r})"
        if t == ActionType.PRESS:
            return "press()"
        return _other_verb(action, self) if action.raw.strip() else "other()"


class JsonDialect(Dialect):
    """One JSON object per action: {"action": "CLICK", "point": [x, y]}"""

    name = 'json'
    grammar = 'json-object-v1'

    def _parse(self, text: str) -> Action:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise self._error(f"invalid JSON: {e.msg}", text, e.pos) from e
        if not isinstance(data, dict) or not isinstance(data.get('action'), str):
            raise self._error("expected an object with an 'action' string", text, 0)

        verb = data['action'].upper()
        if verb not in ActionType.__members__ or verb == 'OTHER':
            return Action.other(text)
        action_type = ActionType(verb)
        if action_type == ActionType.CLICK:
            point = data.get('point')
            if not isinstance(point, list):
                raise self._error("CLICK needs a 'point' list", text, 0)
            return Action(ActionType.CLICK, point=Point.from_list(point), raw=text)
        if action_type == ActionType.SCROLL:
            return Action(ActionType.SCROLL, direction=data.get('direction'), raw=text)
        if action_type == ActionType.TYPE:
            return Action(ActionType.TYPE, text=data.get('text'), raw=text)
        if action_type == ActionType.OPENAPP:
            return Action(ActionType.OPENAPP, app_name=data.get('app_name'), raw=text)
        return Action(action_type, raw=text)

    def _format(self, action: Action) -> str:
        if action.type == ActionType.OTHER:
            return _other_verb(action, self) if action.raw.strip() else json.dumps({'action': 'other'})
        data = action.to_dict()
        data.pop('raw', None)
        data['action'] = data.pop('type')
        return json.dumps(data, ensure_ascii=False, sort_keys=True)


_REGISTRY: Dict[str, Dialect] = {}


def register_dialect(dialect: Dialect) -> Dialect:
    """Add a dialect to the registry (replacing one with the same name)"""
    _REGISTRY[dialect.name] = dialect
    return dialect


def get_dialect(name: Union[str, Dialect]) -> Dialect:
    if isinstance(name, Dialect):
        return name
    if name not in _REGISTRY:
        raise ConfigError(f"Unknown dialect '{name}'. Available: {', '.join(list_dialects())}")
    return _REGISTRY[name]


def list_dialects() -> List[str]:
    return sorted(_REGISTRY)


for _dialect in (CanonicalDialect(), FunctionCallDialect(), JsonDialect()):
    register_dialect(_dialect)


def parse_action(raw: Union[str, bytes], dialect: Union[str, Dialect] = 'canonical') -> Action:
    """Parse one agent output into a canonical Action"""
    return get_dialect(dialect).parse(raw)


def format_action(action: Action, dialect: Union[str, Dialect] = 'canonical') -> str:
    """Render a canonical Action in the given dialect"""
    return get_dialect(dialect).format(action)


def parse_or_other(raw: Union[str, bytes], dialect: Union[str, Dialect] = 'canonical') -> Action:
    """Parse, mapping grammar violations to OTHER so they score as non-matches"""
    try:
        return parse_action(raw, dialect)
    except ActionParseError as e:
        return Action.other(e.raw)
