"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise, or when
``FSDTIGA_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy implementations are used.
"""
from __future__ import annotations

import os

from . import _pykernels

_force_python = os.environ.get("FSDTIGA_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-python backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

find_spans = _impl.find_spans
basis_ders_batch = _impl.basis_ders_batch
fsdt_element_matrices = _impl.fsdt_element_matrices
mass_matrices = _impl.mass_matrices

__all__ = [
    "BACKEND",
    "find_spans",
    "basis_ders_batch",
    "fsdt_element_matrices",
    "mass_matrices",
]
