"""Run configuration shared by the CLI, scripts and verification suites."""
from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_SEED = 20240607


def thread_cap() -> int:
    """Parallelism limit from CHAINCALC_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("CHAINCALC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class FlowConfig:
    a: float = 0.0
    b: float = 1.0
    depth_space: int = 8
    depth_time: int = 10
    tol: float = 1e-10


@dataclass(frozen=True)
class NormConfig:
    r: int = 1
    lift: bool = True
