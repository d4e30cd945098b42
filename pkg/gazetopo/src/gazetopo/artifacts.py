"""Atomic file emission for every artifact the pipeline writes.

Files are written next to their destination under a ``.tmp`` suffix and moved
into place with ``os.replace`` so a crashed run never leaves half a report.
"""

from __future__ import annotations

import json
import logging
import os
import re
from pathlib import Path
from typing import Any, Union

import pandas as pd

from .errors import InputError

__all__ = ["atomic_write_text", "write_json", "read_json", "write_frame"]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# strings are matched first so digits inside them are left alone
_JSON_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?')


def atomic_write_text(path: PathLike, text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(target.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, target)
    logger.debug("wrote %s", target)
    return target


def _float_token(match: "re.Match[str]") -> str:
    token = match.group(0)
    if token.startswith('"') or not any(c in token for c in ".eE"):
        return token
    text = f"{float(token):.17g}"
    return text if any(c in text for c in ".e") else text + ".0"


def write_json(path: PathLike, payload: Any) -> Path:
    """Write sorted, indented JSON with every float at 17 significant digits."""
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    text = _JSON_TOKEN.sub(_float_token, text) + "\n"
    return atomic_write_text(path, text)


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: file not found")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc


def write_frame(path: PathLike, frame: pd.DataFrame, *, float_format: str = "%.17g") -> Path:
    """Write a DataFrame as UTF-8 CSV; 17 significant digits round-trip every float."""
    text = frame.to_csv(index=False, float_format=float_format, lineterminator="\n")
    return atomic_write_text(path, text)
