from __future__ import annotations

import os
import shutil
from pathlib import Path

import pytest

from qcheck.smt import SOLVER_ENV_VAR, SolverHandle

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
SHIM = REPO / "tools" / "solver" / "smtshim.mjs"


def solver_command() -> str | None:
    env = os.environ.get(SOLVER_ENV_VAR)
    if env:
        return env
    if shutil.which("z3"):
        return "z3 -in"
    if shutil.which("node") and (SHIM.parent / "node_modules").exists():
        return f"node {SHIM}"
    return None


@pytest.fixture(scope="session")
def solver_cmd() -> str:
    cmd = solver_command()
    if cmd is None:
        pytest.skip("no SMT solver available (set QCHECK_SOLVER or install z3 / the node shim)")
    os.environ[SOLVER_ENV_VAR] = cmd
    return cmd


@pytest.fixture(scope="session")
def solver(solver_cmd: str):
    with SolverHandle(solver_cmd, timeout=60.0) as handle:
        yield handle


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES
