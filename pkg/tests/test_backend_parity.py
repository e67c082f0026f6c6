"""Compiled inner loops against the NumPy fallback, bit-for-bit intent."""

import os
import subprocess
import sys

import numpy as np
import pytest

from oscint import _fastops_py
from oscint._backend import backend_name
from oscint.groups import heisenberg_group
from oscint.lattice import Grid

_compiled = pytest.importorskip(
    "oscint._fastops", reason="compiled extension not built")

_GRID = Grid(heisenberg_group(), 0.25, (3, 3, 6))
_KGRID = Grid(heisenberg_group(), 0.25, (2, 2, 4))


def _rand(grid, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    return (rng.standard_normal(grid.size)
            + 1j * rng.standard_normal(grid.size))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_convolve_direct_parity(seed):
    f = _rand(_GRID, seed)
    kern = _rand(_KGRID, seed + 100)
    structure = np.ascontiguousarray(_GRID.group.structure)
    args = (np.ascontiguousarray(f),
            np.array(_GRID.extents, dtype=np.int64), np.ascontiguousarray(kern),
            np.array(_KGRID.extents, dtype=np.int64), _GRID.spacing, structure)
    ours = np.zeros(_GRID.size, dtype=np.complex128)
    _compiled.convolve_direct(*args, ours)
    ref = np.zeros(_GRID.size, dtype=np.complex128)
    _fastops_py.convolve_direct(*args, ref)
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    assert np.max(np.abs(ours - ref)) <= 1e-10 * scale


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_shifted_l1_diff_parity(seed):
    kern = _rand(_KGRID, seed)
    structure = np.ascontiguousarray(_KGRID.group.structure)
    mask = (_KGRID.quasi_norms() >= 0.25).astype(np.uint8)
    rng = np.random.Generator(np.random.Philox(seed + 50))
    for _ in range(5):
        y = rng.uniform(-0.4, 0.4, size=3)
        a = _compiled.shifted_l1_diff(
            np.ascontiguousarray(kern), np.array(_KGRID.extents, np.int64),
            _KGRID.spacing, structure, np.ascontiguousarray(y), mask)
        b = _fastops_py.shifted_l1_diff(
            np.ascontiguousarray(kern), np.array(_KGRID.extents, np.int64),
            _KGRID.spacing, structure, np.ascontiguousarray(y), mask)
        assert a == pytest.approx(b, rel=1e-10, abs=1e-12)


def test_backend_reports_compiled_here():
    assert backend_name() == "compiled"


def test_disable_flag_forces_fallback():
    env = dict(os.environ, OSCINT_DISABLE_EXT="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from oscint._backend import backend_name; print(backend_name())"],
        env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "numpy"
