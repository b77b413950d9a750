"""Rod-solver backend selection.

The compiled extension is preferred when importable; the pure-Python
reference otherwise. ``VESSELNAV_BACKEND`` forces the choice: ``compiled``,
``fallback`` or ``auto``. Both backends are bit-identical by construction.
"""

from __future__ import annotations

import os

ERR_NONE = 0
ERR_NONFINITE = 1
ERR_EXPLOSION = 2


def _load():
    choice = os.environ.get("VESSELNAV_BACKEND", "auto")
    if choice not in ("auto", "compiled", "fallback"):
        raise RuntimeError(f"VESSELNAV_BACKEND must be auto|compiled|fallback, got {choice!r}")
    if choice in ("auto", "compiled"):
        try:
            from . import _rodkernel

            return _rodkernel, "compiled"
        except ImportError:
            if choice == "compiled":
                raise
    from . import _kernel_py

    return _kernel_py, "fallback"


_kernel, BACKEND_NAME = _load()
solve_rod = _kernel.solve_rod


def available_backends() -> list[str]:
    names = []
    try:
        from . import _rodkernel  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    names.append("fallback")
    return names


def get_backend(name: str):
    """Fetch a specific backend module (for equivalence tests/benchmarks)."""
    if name == "compiled":
        from . import _rodkernel

        return _rodkernel
    if name == "fallback":
        from . import _kernel_py

        return _kernel_py
    raise ValueError(f"unknown backend {name!r}")
