"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
reference in ``_kernels_py`` takes over. Set ``METASHEET_PURE_PYTHON=1`` to
force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("METASHEET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

programmed_fraction = _impl.programmed_fraction
memristance = _impl.memristance
integrate_dose = _impl.integrate_dose
retrieve_batch = _impl.retrieve_batch


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out
