"""Backend selection for the CSR matrix-vector kernel.

The compiled Cython kernel is preferred when the extension built; a pure
numpy fallback is used otherwise. Set the environment variable
``SPECTRALGAP_PURE_PYTHON=1`` before import to force the fallback (used by
the ``bench`` CLI subcommand to compare both backends).
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

try:
    from spectralgap import _csr_kernels

    HAVE_COMPILED = True
except ImportError:  # source tree without a built extension
    _csr_kernels = None
    HAVE_COMPILED = False


def csr_matvec_python(indptr, indices, data, x):
    """Numpy fallback: segment-sum of data * x[indices] over CSR rows."""
    n = indptr.shape[0] - 1
    nnz = data.shape[0]
    out = np.zeros(n)
    if nnz == 0:
        return out
    prod = data * x[indices]
    # reduceat over the nonempty rows only: consecutive nonempty starts
    # bound each segment exactly (empty rows share their successor's start)
    nonempty = np.diff(indptr) > 0
    out[nonempty] = np.add.reduceat(prod, indptr[:-1][nonempty])
    return out


def csr_matvec_compiled(indptr, indices, data, x):
    """Compiled CSR row loop; raises if the extension is unavailable."""
    if not HAVE_COMPILED:
        raise RuntimeError("compiled CSR kernel is not available in this install")
    out = np.empty(indptr.shape[0] - 1)
    _csr_kernels.csr_matvec(indptr, indices, data, x, out)
    return out


_FORCED_PYTHON = os.environ.get("SPECTRALGAP_PURE_PYTHON", "") not in ("", "0")
_ACTIVE = "python" if (_FORCED_PYTHON or not HAVE_COMPILED) else "compiled"
_IMPLS = {"python": csr_matvec_python, "compiled": csr_matvec_compiled}


def active_backend() -> str:
    return _ACTIVE


def csr_matvec(indptr, indices, data, x):
    return _IMPLS[_ACTIVE](indptr, indices, data, x)


@contextlib.contextmanager
def backend(name: str):
    """Temporarily switch the dispatching backend ('python' or 'compiled')."""
    global _ACTIVE
    if name not in _IMPLS:
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled CSR kernel is not available in this install")
    previous = _ACTIVE
    _ACTIVE = name
    try:
        yield
    finally:
        _ACTIVE = previous
