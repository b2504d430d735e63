"""EM kernel backends.

Two interchangeable implementations of the mixture EM inner loop live here:

* ``_kernel`` -- compiled Cython extension (built by setup.py);
* ``pykernel`` -- pure-NumPy fallback, always available.

The active backend is chosen once at import time: the compiled kernel when it
imported cleanly, the Python one otherwise.  The environment variable
``SHELLCOHORT_EM_BACKEND`` overrides the choice (``compiled``, ``python`` or
``auto``).  ``benchmarks/bench_em.py`` compares the two.
"""

from __future__ import annotations

import os

from . import pykernel

try:  # pragma: no cover - exercised indirectly via backend tests
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

_ENV_VAR = "SHELLCOHORT_EM_BACKEND"
_ALIASES = {
    "python": "python",
    "py": "python",
    "numpy": "python",
    "compiled": "compiled",
    "c": "compiled",
    "cython": "compiled",
    "auto": "auto",
    "": "auto",
}


def available_backends() -> tuple[str, ...]:
    """Names of the kernels importable in this environment."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return tuple(names)


def get_kernel(name: str | None = None):
    """Return the module implementing ``em_run`` for the requested backend.

    ``None`` consults SHELLCOHORT_EM_BACKEND and defaults to ``auto``
    (compiled when built, Python otherwise).
    """
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto")
    key = _ALIASES.get(name.strip().lower())
    if key is None:
        raise ValueError(
            f"unknown EM backend {name!r}; expected one of 'auto', 'compiled', 'python'"
        )
    if key == "python":
        return pykernel
    if key == "compiled":
        if _compiled is None:
            raise RuntimeError(
                "compiled EM kernel requested via "
                f"{_ENV_VAR} but the extension is not built"
            )
        return _compiled
    return _compiled if _compiled is not None else pykernel


def backend_name(name: str | None = None) -> str:
    """Resolved name ('compiled' or 'python') of the backend in use."""
    return "compiled" if get_kernel(name) is _compiled and _compiled is not None else "python"


def em_run(*args, **kwargs):
    """Dispatch one EM run to the active backend (see pykernel.em_run)."""
    return get_kernel().em_run(*args, **kwargs)
