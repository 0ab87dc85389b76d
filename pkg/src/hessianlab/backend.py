"""Kernel backend selection.

The hot kernels (batched symmetric polynomials, block-reduced Hessian
invariants) exist twice: a Cython extension ``hessianlab._core`` and a
pure-NumPy fallback ``hessianlab._core_py``.  The compiled one is used
when importable; set ``HESSIANLAB_PURE=1`` to force the fallback.
"""

import os

_FORCE_PURE = os.environ.get("HESSIANLAB_PURE", "") not in ("", "0")

if _FORCE_PURE:
    from . import _core_py as core

    BACKEND = "python"
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _core_py as core

        BACKEND = "python"


def available_backends():
    """Importable kernel modules keyed by name (for tests / benchmarks)."""
    from . import _core_py

    mods = {"python": _core_py}
    try:
        from . import _core  # type: ignore[attr-defined]

        mods["cython"] = _core
    except ImportError:
        pass
    return mods
