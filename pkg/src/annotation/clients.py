"""
Annotator Clients
HTTP chat-completion annotators and scripted mock annotators
"""

import logging
import os
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import requests
import yaml

from src.actions import BBox
from src.errors import AnnotatorError, ConfigError
from .records import BoxKey, box_key

logger = logging.getLogger(__name__)

ANNOTATOR_ROLES = ('G', 'Q')


@dataclass(frozen=True)
class Highlight:
    """Box to draw on the screenshot before it is shown to the annotator"""
    box: BBox
    stroke: str = 'red'
    width: int = 4

    def to_dict(self) -> Dict[str, Any]:
        return {'box': self.box.to_list(), 'stroke': self.stroke, 'width': self.width}


@dataclass(frozen=True)
class AnnotatorRequest:
    screen_id: str
    box: BBox
    stage: str
    prompt: str
    image_ref: str = ''
    highlight: Optional[Highlight] = None

    def to_payload(self, model: str) -> Dict[str, Any]:
        message: Dict[str, Any] = {'role': 'user', 'text': self.prompt}
        if self.image_ref:
            message['image_ref'] = self.image_ref
        if self.highlight is not None:
            message['highlight'] = self.highlight.to_dict()
        return {'model': model, 'messages': [message], 'temperature': 0}


class AnnotatorClient(ABC):
    """One independent annotator (role G or Q)"""

    def __init__(self, annotator_id: str):
        self.annotator_id = annotator_id

    @abstractmethod
    def complete(self, request: AnnotatorRequest) -> str:
        """Return the raw text response for one request"""

    def check_reachable(self) -> None:
        """Raise AnnotatorError when the annotator cannot be contacted"""


class HttpAnnotatorClient(AnnotatorClient):
    """Chat-completion style annotator behind a JSON/HTTP endpoint"""

    def __init__(
        self,
        annotator_id: str,
        url: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        highlight_stroke: str = 'red',
        highlight_width: int = 4,
        session: Optional[requests.Session] = None,
    ):
        super().__init__(annotator_id)
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max(1, max_retries)
        self.backoff_base = backoff_base
        self.highlight_stroke = highlight_stroke
        self.highlight_width = highlight_width
        self.session = session or requests.Session()

    def _headers(self) -> Dict[str, str]:
        headers = {'Content-Type': 'application/json'}
        if self.api_key:
            headers['Authorization'] = f"Bearer {self.api_key}"
        return headers

    @staticmethod
    def _extract_text(data: Dict[str, Any]) -> str:
        if 'choices' in data:
            choice = data['choices'][0]
            if 'message' in choice:
                return choice['message'].get('content') or ''
            return choice.get('text') or ''
        if 'text' in data:
            return data['text']
        raise AnnotatorError(f"Unrecognized annotator response: {str(data)[:200]}")

    def complete(self, request: AnnotatorRequest) -> str:
        if request.highlight is not None:
            request = AnnotatorRequest(
                request.screen_id, request.box, request.stage, request.prompt, request.image_ref,
                Highlight(request.highlight.box, self.highlight_stroke, self.highlight_width),
            )
        payload = request.to_payload(self.model)

        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries):
            try:
                response = self.session.post(self.url, json=payload, headers=self._headers(),
                                             timeout=self.timeout)
                response.raise_for_status()
                return self._extract_text(response.json())
            except (requests.RequestException, ValueError, KeyError, IndexError) as e:
                last_error = e
                if attempt < self.max_retries - 1:
                    wait = self.backoff_base * (2 ** attempt)
                    logger.warning("Annotator %s failed on %s (attempt %d/%d), retrying in %.1fs: %s",
                                   self.annotator_id, request.screen_id, attempt + 1,
                                   self.max_retries, wait, e)
                    time.sleep(wait)

        logger.error("Annotator %s gave up on %s: %s", self.annotator_id, request.screen_id, last_error)
        raise AnnotatorError(f"Annotator {self.annotator_id} failed after {self.max_retries} attempts: "
                             f"{last_error}")

    def check_reachable(self) -> None:
        try:
            self.session.head(self.url, headers=self._headers(), timeout=min(self.timeout, 10.0))
        except requests.RequestException as e:
            raise AnnotatorError(f"Annotator {self.annotator_id} unreachable at {self.url}: {e}")


class ScriptedAnnotatorClient(AnnotatorClient):
    """
    Deterministic annotator replaying scripted responses

    Each entry is keyed by (screen_id, box) and holds a response per stage.
    A response may be a list, consumed one call at a time (the last one
    repeats), or the string ``"!error"`` to simulate a transport failure.
    Unscripted identification requests answer no.
    """

    ERROR_TOKEN = '!error'

    def __init__(self, annotator_id: str, script: Dict[BoxKey, Dict[str, Union[str, List[str]]]],
                 default_identify: str = 'Answer: no'):
        super().__init__(annotator_id)
        self.script = script
        self.default_identify = default_identify
        self.calls: Dict[Tuple[BoxKey, str], int] = {}
        self._lock = threading.Lock()

    def complete(self, request: AnnotatorRequest) -> str:
        key = box_key(request.screen_id, request.box)
        entry = self.script.get(key, {})
        responses = entry.get(request.stage)
        if responses is None:
            responses = self.default_identify if request.stage == 'identify' else ''
        if isinstance(responses, str):
            responses = [responses]

        with self._lock:
            n = self.calls.get((key, request.stage), 0)
            self.calls[(key, request.stage)] = n + 1
        text = responses[min(n, len(responses) - 1)]
        if text == self.ERROR_TOKEN:
            raise AnnotatorError(f"Scripted failure for {self.annotator_id} on {key}")
        return text


def load_scripted_annotators(path: Union[str, Path]) -> Tuple[ScriptedAnnotatorClient, ScriptedAnnotatorClient]:
    """
    Load a pair of scripted annotators from YAML

    Expected layout::

        annotators:
          G:
            - {screen_id: s1, box: [x1, y1, x2, y2], identify: "Answer: yes",
               state_feature: "State: on\\nFeature: Wi-Fi"}
          Q:
            - ...
    """
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f) or {}

    roles = data.get('annotators', {})
    clients = []
    for role in ANNOTATOR_ROLES:
        script: Dict[BoxKey, Dict[str, Any]] = {}
        for entry in roles.get(role, []) or []:
            key = box_key(str(entry['screen_id']), BBox.from_list(entry['box']))
            script[key] = {stage: entry[stage] for stage in ('identify', 'state_feature') if stage in entry}
        clients.append(ScriptedAnnotatorClient(role, script))
    return clients[0], clients[1]


def create_annotators(annotation_cfg: Dict[str, Any],
                      mock_script: Optional[Union[str, Path]] = None) -> Tuple[AnnotatorClient, AnnotatorClient]:
    """
    Build the annotator pair

    Uses the scripted mock annotators when ``mock_script`` is given, otherwise
    HTTP annotators configured from ANNOTATOR_{G,Q}_{URL,MODEL,API_KEY}.
    """
    if mock_script is not None:
        return load_scripted_annotators(mock_script)

    clients = []
    for role in ANNOTATOR_ROLES:
        url = os.environ.get(f"ANNOTATOR_{role}_URL")
        model = os.environ.get(f"ANNOTATOR_{role}_MODEL")
        if not url or not model:
            raise ConfigError(f"Annotator {role} needs ANNOTATOR_{role}_URL and ANNOTATOR_{role}_MODEL "
                              f"(or run with --mock-annotators)")
        clients.append(HttpAnnotatorClient(
            annotator_id=role,
            url=url,
            model=model,
            api_key=os.environ.get(f"ANNOTATOR_{role}_API_KEY"),
            timeout=annotation_cfg.get('timeout', 60.0),
            max_retries=annotation_cfg.get('max_retries', 3),
            backoff_base=annotation_cfg.get('backoff_base', 1.0),
            highlight_stroke=annotation_cfg.get('highlight_stroke', 'red'),
            highlight_width=annotation_cfg.get('highlight_width', 4),
        ))
    return clients[0], clients[1]
