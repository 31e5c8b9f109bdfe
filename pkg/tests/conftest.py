import os
import subprocess
import sys
import time
from functools import lru_cache

import pytest

from alphatree.limit import sample_environment

ENV_SEED = 20240611


@lru_cache(maxsize=None)
def environment_ball_counts(alpha: float = 0.5, envs: int = 100_000, radius: int = 3):
    """Radius-R ball frequencies over ``envs`` environments; returns (counts, seconds)."""
    t0 = time.perf_counter()
    counts: dict[str, int] = {}
    for i in range(envs):
        code = sample_environment(alpha, max(radius - 1, 1), ENV_SEED, i, 10**6).ball_code(radius)
        counts[code] = counts.get(code, 0) + 1
    return counts, time.perf_counter() - t0


def run_python(code: str, *, disable_numba: bool = False, timeout: float = 600) -> str:
    env = dict(os.environ)
    env.pop("ALPHATREE_DISABLE_NUMBA", None)
    if disable_numba:
        env["ALPHATREE_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                          text=True, timeout=timeout)
    if proc.returncode:
        raise AssertionError(proc.stderr)
    return proc.stdout


@pytest.fixture
def env_ball_counts():
    return environment_ball_counts


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str, seconds: float) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail} | {seconds:.2f} s"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
