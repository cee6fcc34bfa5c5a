"""Dataset desensitization by projection onto an RDCA privacy-noise subspace."""

from .rdca import (
    RdcaModel,
    SubspaceProjection,
    compute_scatter,
    desensitize,
    fit_rdca,
    full_projection,
    noise_subspace,
    project,
    signal_subspace,
)

__version__ = "0.1.0"

__all__ = [
    "RdcaModel",
    "SubspaceProjection",
    "compute_scatter",
    "desensitize",
    "fit_rdca",
    "full_projection",
    "noise_subspace",
    "project",
    "signal_subspace",
]
