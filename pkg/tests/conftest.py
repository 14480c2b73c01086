"""Shared fixtures.

The expensive piece is one full toy-profile training run, executed once per
session through the real CLI in a fresh interpreter and reused by the CLI,
service, and acceptance tests. Child CPU time is read off the process rusage
counters so the end-to-end budget check measures the training run itself, not
the surrounding test harness.
"""

from __future__ import annotations

import resource
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import pytest


def run_cli(args):
    """Run the command line tool in a fresh interpreter."""
    return subprocess.run(
        [sys.executable, "-m", "style_vton.cli", *[str(a) for a in args]],
        capture_output=True,
        text=True,
    )


def timed_cli(args):
    """run_cli plus (wall seconds, child cpu seconds) for the invocation."""
    before = resource.getrusage(resource.RUSAGE_CHILDREN)
    t0 = time.monotonic()
    proc = run_cli(args)
    wall = time.monotonic() - t0
    after = resource.getrusage(resource.RUSAGE_CHILDREN)
    cpu = (after.ru_utime - before.ru_utime) + (after.ru_stime - before.ru_stime)
    return proc, wall, cpu


@dataclass(frozen=True)
class ToyRunArtifacts:
    data_dir: Path
    ckpt_dir: Path
    cpu_seconds: float
    wall_seconds: float
    stdout: str


@pytest.fixture(scope="session")
def toy_artifacts(tmp_path_factory) -> ToyRunArtifacts:
    """Train every stage of the toy profile once (seed 0) and keep the run."""
    root = tmp_path_factory.mktemp("toyrun")
    data_dir = root / "data"
    ckpt_dir = root / "run"
    proc, wall, cpu = timed_cli(
        [
            "train",
            "--stage",
            "all",
            "--profile",
            "toy",
            "--seed",
            "0",
            "--data",
            data_dir,
            "--out",
            ckpt_dir,
        ]
    )
    assert proc.returncode == 0, f"toy training failed:\n{proc.stdout}\n{proc.stderr}"
    return ToyRunArtifacts(data_dir, ckpt_dir, cpu, wall, proc.stdout)
