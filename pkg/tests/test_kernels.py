import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duality_lab import kernels
from duality_lab.kernels import _phase_py
from duality_lab.numerics import random_density, random_source

seeds = st.integers(0, 2**32 - 1)

try:
    from duality_lab.kernels import _phase_cy
except ImportError:  # extension not built
    _phase_cy = None

needs_compiled = pytest.mark.skipif(_phase_cy is None, reason="compiled kernel not built")


def starts(n, r, seed):
    rng = random_source(seed)
    return np.exp(1j * rng.uniform(0, 2 * np.pi, (r, n)))


def test_backend_is_named():
    assert kernels.BACKEND in ("cython", "python")


def test_env_var_forces_fallback():
    code = "import duality_lab.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, DUALITY_LAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_two_path_closed_form():
    q = np.array([[0.3, 0.1 + 0.2j], [0.1 - 0.2j, 0.7]])
    hi, _, _ = _phase_py.phase_ascent(q, starts(2, 8, 0), 1, 5000, 1e-12)
    lo, _, _ = _phase_py.phase_ascent(q, starts(2, 8, 0), -1, 5000, 1e-12)
    assert hi == pytest.approx(1.0 + 2 * abs(q[0, 1]), abs=1e-12)
    assert lo == pytest.approx(1.0 - 2 * abs(q[0, 1]), abs=1e-12)


@given(seeds, st.integers(2, 6), st.sampled_from([1, -1]))
@settings(max_examples=30)
def test_returned_vector_attains_value(seed, n, sign):
    q = random_density(n, 2, random_source(seed))
    val, v, sweeps = _phase_py.phase_ascent(q, starts(n, 8, seed), sign, 5000, 1e-12)
    assert np.allclose(np.abs(v), 1.0)
    assert np.real(v.conj() @ q @ v) == pytest.approx(val, abs=1e-12)
    assert 1 <= sweeps <= 5000


@needs_compiled
@given(seeds, st.integers(2, 6), st.sampled_from([1, -1]))
@settings(max_examples=30)
def test_backends_agree(seed, n, sign):
    q = random_density(n, int(random_source(seed).integers(1, n + 1)), random_source(seed))
    v0 = starts(n, 16, seed)
    a = _phase_py.phase_ascent(q, v0, sign, 5000, 1e-12)
    b = _phase_cy.phase_ascent(q, v0, sign, 5000, 1e-12)
    assert a[0] == pytest.approx(b[0], abs=1e-9)


@given(seeds, st.integers(2, 5))
@settings(max_examples=30)
def test_ascent_is_monotone_from_start(seed, n):
    q = random_density(n, n, random_source(seed))
    v0 = starts(n, 1, seed)
    start = np.real(v0[0].conj() @ q @ v0[0])
    val, _, _ = kernels.phase_ascent(q, v0, 1, 5000, 1e-12)
    assert val >= start - 1e-12
