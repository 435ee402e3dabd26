"""Verification of quantum processes with ancilla-assisted (AAPV) and
prepare-and-measure (PMPV) protocols."""
from .channels import (NoiseSpec, QuantumProcess, average_gate_fidelity, choi_matrix,
                       choi_state, entanglement_fidelity, gate, make_noise)
from .errors import QPVError
from .pmpv import convert, failure_probability, postselected_failure_probability, xi_matrix
from .strategies import (AAPVStrategy, canned, plan_samples, spectral_gap, strategy_matrix)

__all__ = [
    "AAPVStrategy", "NoiseSpec", "QPVError", "QuantumProcess", "average_gate_fidelity",
    "canned", "choi_matrix", "choi_state", "convert", "entanglement_fidelity",
    "failure_probability", "gate", "make_noise", "plan_samples",
    "postselected_failure_probability", "spectral_gap", "strategy_matrix", "xi_matrix",
]
__version__ = "0.1.0"
