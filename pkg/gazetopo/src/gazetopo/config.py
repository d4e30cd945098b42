"""Process-wide settings read from the environment.

Environment variables (CLI flags override them):
    GAZETOPO_SEED       root seed for every derived stage seed (default 0)
    GAZETOPO_N_JOBS     joblib workers for featurization and tree training (default 1)
    GAZETOPO_LOG_LEVEL  logging level name (default INFO)
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError

__all__ = ["Settings", "get_settings", "reset_settings", "derive_seed", "SPLIT_STAGE", "FOREST_STAGE"]


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise InputError(f"{name} must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class Settings:
    seed: int = 0
    n_jobs: int = 1
    log_level: str = "INFO"

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise InputError("seed must be a non-negative integer")
        if self.n_jobs == 0:
            raise InputError("n_jobs must be non-zero (use -1 for all cores)")
        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            raise InputError(f"unknown log level {self.log_level!r}")

    @staticmethod
    def load_from_env() -> "Settings":
        return Settings(
            seed=_env_int("GAZETOPO_SEED", 0),
            n_jobs=_env_int("GAZETOPO_N_JOBS", 1),
            log_level=os.getenv("GAZETOPO_LOG_LEVEL", "INFO").upper(),
        )


_SETTINGS: Optional[Settings] = None


def get_settings() -> Settings:
    global _SETTINGS
    if _SETTINGS is None:
        _SETTINGS = Settings.load_from_env()
    return _SETTINGS


def reset_settings() -> None:
    """Forget the cached settings so the next call re-reads the environment."""
    global _SETTINGS
    _SETTINGS = None


# Stage keys for seeds derived from the root seed. Never renumber: recorded
# run-manifests depend on them.
SPLIT_STAGE = 1
FOREST_STAGE = 2


def derive_seed(root_seed: int, stage: int) -> int:
    """Deterministic 32-bit seed for ``stage`` derived from ``root_seed``."""

    sequence = np.random.SeedSequence(int(root_seed), spawn_key=(int(stage),))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
