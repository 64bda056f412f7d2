"""
Run Configuration
Defaults, config.yaml loading and logging setup for every subcommand
"""

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from src.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
    'project': {
        'name': 'togglebench',
        'version': '1.0.0',
    },
    'logging': {
        'level': 'INFO',
        'format': '%(asctime)s %(levelname)-7s %(name)s: %(message)s',
        'save_logs': False,
    },
    'actions': {
        'dialect': 'canonical',
    },
    'matching': {
        'click_threshold': 'state-control',
        'distance_metric': 'euclidean',
        'stemmer': 'porter',
        'n_jobs': 1,
    },
    'annotation': {
        'prompts_dir': None,
        'patterns': None,
        'strict_feature_match': False,
        'iou_cutoff': 0.9,
        'n_workers': 4,
        'concurrent_queries': True,
        'reprompt_limit': 1,
        'timeout': 60.0,
        'max_retries': 3,
        'backoff_base': 1.0,
        'highlight_stroke': 'red',
        'highlight_width': 4,
    },
    'builder': {
        'ratio': 0.9,
        'templates': None,
        'paraphrase': False,
    },
    'star': {
        'templates': None,
        'history_mode': 'none',
        'n_jobs': 1,
    },
    'simulation': {
        'budget': 15,
        'tasks_path': None,
        'n_jobs': 1,
        'agent_timeout': 30.0,
    },
    'report': {
        'format': 'table',
    },
}

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def _merge(defaults: Dict[str, Dict[str, Any]], overrides: Dict[str, Any], source: str) -> Dict[str, Dict[str, Any]]:
    merged = copy.deepcopy(defaults)
    for section, values in overrides.items():
        if section not in merged:
            raise ConfigError(f"{source}: unknown section '{section}' (expected one of {', '.join(merged)})")
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"{source}: section '{section}' must be a mapping")
        unknown = sorted(set(values) - set(merged[section]))
        if unknown:
            raise ConfigError(f"{source}: unknown keys in '{section}': {', '.join(unknown)}")
        merged[section].update(values)
    return merged


def load_config(path: Optional[Union[str, Path]] = None) -> Dict[str, Dict[str, Any]]:
    """
    Merge a YAML config file over the built-in defaults

    A missing default ``config.yaml`` is fine; an explicitly named file that
    does not exist is a configuration error.
    """
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _merge(DEFAULT_CONFIG, data, str(path))


@dataclass
class RunConfig:
    """Validated settings for one CLI invocation"""
    subcommand: str
    output_dir: Path
    seed: int = 0
    log_level: str = 'INFO'
    sections: Dict[str, Dict[str, Any]] = field(default_factory=lambda: copy.deepcopy(DEFAULT_CONFIG))

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        self.log_level = self.log_level.upper()
        if self.log_level not in LOG_LEVELS:
            raise ConfigError(f"Unknown log level '{self.log_level}' (expected one of {', '.join(LOG_LEVELS)})")

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.sections[section]

    def override(self, section: str, key: str, value: Any) -> None:
        """Apply a CLI flag; ``None`` means the flag was not given"""
        if value is None:
            return
        if key not in self.sections.get(section, {}):
            raise ConfigError(f"Unknown setting {section}.{key}")
        self.sections[section][key] = value


def setup_logging(level: str = 'INFO', log_file: Optional[Union[str, Path]] = None,
                  fmt: str = DEFAULT_CONFIG['logging']['format']) -> None:
    handlers = [logging.StreamHandler()]
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=getattr(logging, level.upper()), format=fmt, handlers=handlers, force=True)
