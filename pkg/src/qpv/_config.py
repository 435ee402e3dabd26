"""Global tolerances, the dense dimension cap and backend selection."""
import os

HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-10
EIG_RESIDUAL_TOL = 1e-10
NORM_TOL = 1e-12
PSD_TOL = 1e-10

DEFAULT_DIM_CAP = 2**10
MAX_DIM_CAP = 2**12

_dim_cap_override = None


def dim_cap():
    """Largest total Hilbert-space dimension a dense operator may have.

    Resolution order: :func:`set_dim_cap`, then ``QPV_DIM_CAP``, then 1024.
    """
    if _dim_cap_override is not None:
        return _dim_cap_override
    raw = os.environ.get("QPV_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    cap = int(raw)
    if not 1 <= cap <= MAX_DIM_CAP:
        raise ValueError(f"QPV_DIM_CAP must lie in [1, {MAX_DIM_CAP}], got {cap}")
    return cap


def set_dim_cap(cap):
    """Override the dimension cap for this process; ``None`` restores the default."""
    global _dim_cap_override
    if cap is not None and not 1 <= cap <= MAX_DIM_CAP:
        raise ValueError(f"dimension cap must lie in [1, {MAX_DIM_CAP}], got {cap}")
    _dim_cap_override = cap
