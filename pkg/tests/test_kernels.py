"""Both kernel backends must agree on identical inputs."""

import importlib
import os

import numpy as np
import pytest

from weyl_lab import _pykernels, kernels
from weyl_lab.hermite import basis_enumerate

_core = pytest.importorskip("weyl_lab._core")


@pytest.mark.skipif(os.environ.get("WEYL_LAB_PURE_PYTHON") == "1", reason="fallback forced")
def test_compiled_backend_selected_by_default():
    assert kernels.BACKEND == "cython"


def test_pure_python_override(monkeypatch):
    monkeypatch.setenv("WEYL_LAB_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.hermite_table is _pykernels.hermite_table
    finally:
        monkeypatch.delenv("WEYL_LAB_PURE_PYTHON")
        importlib.reload(kernels)


def test_hermite_tables_agree(rng):
    s = np.concatenate([rng.normal(scale=3.0, size=300), [0.0, 40.0, -55.0]])
    a = _pykernels.hermite_table(400, s)
    b = _core.hermite_table(400, s)
    assert np.abs(a - b).max() < 1e-13


@pytest.mark.parametrize("a,x,pref", [(0.0, 2.5, 0.0), (1.0, np.pi, -np.pi / 2), (3.0, 500.0, -250.0)])
def test_laguerre_tables_agree(a, x, pref):
    p = _pykernels.laguerre_table(50_000, a, x, pref)
    c = _core.laguerre_table(50_000, a, x, pref)
    np.testing.assert_allclose(c, p, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("n,K,D", [(1, 8, 9), (2, 6, 7), (4, 7, 8)])
def test_graded_assembly_agrees(rng, n, K, D):
    basis = basis_enumerate(n, K)
    N = 40
    F = rng.normal(size=(N, n, D, D)) + 1j * rng.normal(size=(N, n, D, D))
    c = rng.normal(size=N) + 1j * rng.normal(size=N)
    a = _pykernels.assemble_graded(F, c, basis.indices)
    b = _core.assemble_graded(F, c, basis.indices)
    # brute-force definition on a few entries
    for bi, ai in [(0, 0), (1, basis.size - 1), (basis.size - 1, 2)]:
        ref = sum(c[i] * np.prod([F[i, j, basis.indices[bi, j], basis.indices[ai, j]] for j in range(n)])
                  for i in range(N))
        assert abs(a[bi, ai] - ref) < 1e-10
    assert np.abs(a - b).max() < 1e-11
