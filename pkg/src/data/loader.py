"""
Data Loader Module
Reads and writes the line-delimited JSON datasets used by every subcommand
"""

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Iterator, List, Tuple, TypeVar, Union

from tqdm import tqdm

from src.annotation import ScreenRecord, ToggleQuadruplet
from .builder import Sample, SplitManifest
from .episodes import Episode

logger = logging.getLogger(__name__)

T = TypeVar('T')
PathLike = Union[str, Path]


def iter_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    """Yield one object per non-blank line"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({e.msg})")


def write_jsonl(path: PathLike, rows: Iterable[Dict[str, Any]]) -> int:
    """Write rows with sorted keys; returns the number of lines written"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + '\n')
            n += 1
    return n


class DataLoader:
    """Loads and saves toolkit datasets"""

    def __init__(self, show_progress: bool = True):
        self.show_progress = show_progress

    def _load(self, path: PathLike, build: Callable[[Dict[str, Any]], T], desc: str) -> List[T]:
        items = []
        for lineno, row in enumerate(tqdm(iter_jsonl(path), desc=desc, disable=not self.show_progress), start=1):
            try:
                items.append(build(row))
            except (KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}: record {lineno} is invalid: {e}")
        logger.info("Loaded %d %s from %s", len(items), desc.lower(), path)
        return items

    def load_records(self, path: PathLike) -> List[ScreenRecord]:
        return self._load(path, ScreenRecord.from_dict, "Records")

    def load_quadruplets(self, path: PathLike) -> List[ToggleQuadruplet]:
        return self._load(path, ToggleQuadruplet.from_dict, "Quadruplets")

    def load_samples(self, path: PathLike) -> List[Sample]:
        return self._load(path, Sample.from_dict, "Samples")

    def load_episodes(self, path: PathLike) -> List[Episode]:
        return self._load(path, Episode.from_dict, "Episodes")

    def load_predictions(self, path: PathLike) -> Dict[str, str]:
        """
        State-control predictions: ``{"sample_id": ..., "prediction": "<raw>"}``

        Later lines win when a sample id repeats.
        """
        rows = self._load(path, lambda r: (str(r['sample_id']), str(r['prediction'])), "Predictions")
        return dict(rows)

    def load_step_predictions(self, path: PathLike) -> Dict[Tuple[str, int], str]:
        """Agentic predictions: ``{"episode_id": ..., "step": i, "prediction": "<raw>"}``"""
        rows = self._load(
            path, lambda r: ((str(r['episode_id']), int(r['step'])), str(r['prediction'])), "Predictions"
        )
        return dict(rows)

    def load_manifest(self, path: PathLike) -> SplitManifest:
        with open(path, 'r', encoding='utf-8') as f:
            return SplitManifest.from_dict(json.load(f))

    def save(self, path: PathLike, items: Iterable[Any]) -> Path:
        """Save objects exposing ``to_dict`` as JSONL"""
        n = write_jsonl(path, (item.to_dict() for item in items))
        logger.info("Saved %d rows to %s", n, path)
        return Path(path)

    def save_manifest(self, path: PathLike, manifest: SplitManifest) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + '\n', encoding='utf-8')
        return path
