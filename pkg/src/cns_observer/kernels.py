"""Backend selection for the finite-volume kernels.

The compiled extension is used when it imports; set
``CNS_OBSERVER_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _kernels_py as python_backend
from ._kernels_py import (  # noqa: F401
    FLUX_LLF,
    FLUX_VFROE,
    RECON_CENTRAL,
    RECON_FIRST,
    RECON_MINMOD,
    RECON_VANLEER,
)

try:
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

FLUXES = {"vfroe": FLUX_VFROE, "llf": FLUX_LLF}
RECONSTRUCTIONS = {
    "first": RECON_FIRST,
    "minmod": RECON_MINMOD,
    "vanleer": RECON_VANLEER,
    "central": RECON_CENTRAL,
}

_requested = os.environ.get("CNS_OBSERVER_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "compiled"):
    raise ImportError(f"CNS_OBSERVER_BACKEND must be auto, python or compiled, got {_requested!r}")
if _requested == "compiled" and compiled_backend is None:
    raise ImportError("CNS_OBSERVER_BACKEND=compiled but the extension is not built")

if compiled_backend is not None and _requested != "python":
    backend = compiled_backend
    BACKEND = "compiled"
else:
    backend = python_backend
    BACKEND = "python"

VACUUM_ERRORS = tuple(
    mod.VacuumError for mod in (python_backend, compiled_backend) if mod is not None
)

nonlinear_rhs = backend.nonlinear_rhs
linear_rhs = backend.linear_rhs
