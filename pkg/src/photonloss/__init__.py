"""Heralded single-photon-loss detection with controlled-squeezing ancillas.

Submodules: ``fock`` (truncated multimode Fock space), ``gates`` (coding
unitaries and continuous-variable gates), ``protocol`` (encode, loss, decode,
recover), ``measurement`` (photon-count statistics), ``synthesis`` (gate
construction certificates) and ``cli``.
"""

from .errors import (
    CodingError,
    DimensionCapError,
    LayoutError,
    PhotonLossError,
    ScenarioError,
    TruncationError,
    UnsupportedRecoveryError,
    ZeroNormError,
)
from .fock import ModeLayout, Operator, StateVector, basis_state, fidelity, make_layout, random_state
from .gates import DECODE, ECS, ENCODE, PCS, CodingSpec, coding_unitary, ecs_unitary, pcs_unitary
from .measurement import classify, count_distribution, no_click_probability, sample_counts
from .protocol import LossEvent, run_protocol, transmit

__version__ = "0.1.0"

__all__ = [
    "CodingError", "DimensionCapError", "LayoutError", "PhotonLossError", "ScenarioError",
    "TruncationError", "UnsupportedRecoveryError", "ZeroNormError",
    "ModeLayout", "Operator", "StateVector", "basis_state", "fidelity", "make_layout", "random_state",
    "DECODE", "ECS", "ENCODE", "PCS", "CodingSpec", "coding_unitary", "ecs_unitary", "pcs_unitary",
    "classify", "count_distribution", "no_click_probability", "sample_counts",
    "LossEvent", "run_protocol", "transmit",
]
