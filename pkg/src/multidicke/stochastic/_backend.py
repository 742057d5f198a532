"""Kernel backend selection.

The compiled extension is preferred when importable; set the environment
variable ``MULTIDICKE_BACKEND=python`` to force the pure-Python fallback
(used by the equality tests and the benchmark).  Both kernels are
bit-identical by construction, so the choice never changes results.
"""

import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_kernel(backend: str | None = None):
    """Resolve a kernel module by name (None = best available)."""
    if backend is None:
        backend = os.environ.get("MULTIDICKE_BACKEND")
    if backend is None:
        return _compiled if _compiled is not None else _kernel_py
    if backend == "python":
        return _kernel_py
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError(
                "compiled kernel requested but the extension is not built"
            )
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")


def backend_name(backend: str | None = None) -> str:
    return get_kernel(backend).BACKEND_NAME
