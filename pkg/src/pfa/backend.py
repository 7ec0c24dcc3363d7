"""Kernel backend selection.

The hot inner-loop kernels (activations, layer normalization, Adam updates)
exist twice: a compiled Cython extension and a pure-numpy fallback.  The
compiled one is preferred when importable; ``PFA_KERNELS=python`` or
``PFA_KERNELS=c`` forces a choice.  Matrix products go through numpy's BLAS
in both cases.

All callers dispatch through the module-level ``active`` reference so tests
and benchmarks can flip backends at runtime with :func:`use`.
"""

import os

from pfa import _kernels_py

_impls = {"python": _kernels_py}
try:
    from pfa import _kernels

    _impls["c"] = _kernels
except ImportError:
    pass


def available():
    """Names of importable backends ('python' always, 'c' when compiled)."""
    return sorted(_impls)


def use(name):
    """Switch the active backend; returns the previous backend's name."""
    global active, name_active
    if name not in _impls:
        raise ValueError(f"backend {name!r} not available (have {available()})")
    prev = name_active
    active = _impls[name]
    name_active = name
    return prev


_env = os.environ.get("PFA_KERNELS", "").strip().lower()
if _env in ("python", "py"):
    name_active = "python"
elif _env in ("c", "compiled"):
    if "c" not in _impls:
        raise ImportError("PFA_KERNELS=c but the compiled extension is not built")
    name_active = "c"
elif _env:
    raise ValueError(f"unrecognized PFA_KERNELS value {_env!r}")
else:
    name_active = "c" if "c" in _impls else "python"

active = _impls[name_active]
