import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"

sys.path.insert(0, str(REPO / "src"))


def run_many(jobs, workers=None):
    """Run (setup, seed) jobs, preserving order; parallel when CPUs allow."""
    from gridswarm.engine import run_once
    if workers is None:
        workers = min(4, os.cpu_count() or 1)
    if workers <= 1 or len(jobs) < 4:
        return [run_once(setup, seed) for setup, seed in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def _run_one(job):
    from gridswarm.engine import run_once
    return run_once(*job)


@pytest.fixture(scope="session")
def scenarios_dir():
    return SCENARIOS
