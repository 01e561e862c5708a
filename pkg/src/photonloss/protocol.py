"""Encode -> (single photon loss) -> decode pipeline, conditional states and
parity recovery."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CodingError, LayoutError, UnsupportedRecoveryError, ZeroNormError
from .fock import (
    ModeLayout,
    Operator,
    StateVector,
    apply,
    basis_state,
    embed,
    fidelity,
    make_layout,
    normalize,
    single_mode_annihilation,
    tail_mass,
    with_ancillas,
)
from .gates import ECS, PCS, CodingSpec, coding_unitary, parity_op
from .measurement import (
    ANCILLA_LOSS,
    OutcomeClass,
    classify,
    count_probabilities,
    outcome_probabilities,
    project_counts,
    sample_counts,
)

NO_EVENT = "None"
INFO_LOSS_EVENT = "InfoLoss"
ANCILLA_LOSS_EVENT = "AncillaLoss"
EVENT_KINDS = (NO_EVENT, INFO_LOSS_EVENT, ANCILLA_LOSS_EVENT)

DEFAULT_ANC_DIM = 120
# the in-flight tail is measured above this fraction of each ancilla truncation
TAIL_FRACTION = 0.9


@dataclass(frozen=True, eq=False)
class LossEvent:
    """A single photon loss (or none).

    ``weights`` are the complex amplitudes of the collective annihilation
    operator over the information modes (InfoLoss) or the ancilla modes
    (AncillaLoss).  ``None`` means uniform weights, resolved once the register
    size is known.
    """

    kind: str = NO_EVENT
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"event kind must be one of {EVENT_KINDS}, got {self.kind!r}")
        if self.weights is None:
            return
        if self.kind == NO_EVENT:
            raise ValueError("a no-loss event carries no weights")
        w = np.asarray(self.weights, dtype=complex).reshape(-1)
        if w.size == 0 or abs(np.vdot(w, w).real - 1.0) > 1e-12:
            raise ValueError("loss weights must have unit norm")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def on_mode(cls, kind: str, mode: int, n_modes: int) -> "LossEvent":
        w = np.zeros(n_modes, dtype=complex)
        w[mode] = 1.0
        return cls(kind, w)

    def resolved_weights(self, n_modes: int) -> np.ndarray:
        if self.kind == NO_EVENT:
            raise ValueError("a no-loss event has no weights")
        if self.weights is None:
            return np.full(n_modes, 1 / np.sqrt(n_modes), dtype=complex)
        if self.weights.size != n_modes:
            raise LayoutError(f"event has {self.weights.size} weights, register has {n_modes} modes")
        return self.weights

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.weights is not None:
            d["weights"] = [[float(w.real), float(w.imag)] for w in self.weights]
        return d

    @classmethod
    def from_dict(cls, d) -> "LossEvent":
        w = d.get("weights")
        if w is not None:
            w = [complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in w]
        return cls(d.get("kind", NO_EVENT), w)

    def __eq__(self, other):
        if not isinstance(other, LossEvent):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.weights is None or other.weights is None:
            return self.weights is None and other.weights is None
        return np.array_equal(self.weights, other.weights)


def collective_loss_op(layout: ModeLayout, event: LossEvent) -> Operator:
    """``sum_k w_k a_k`` over the register named by the event."""
    if event.kind == INFO_LOSS_EVENT:
        modes = [layout.info(i) for i in range(layout.n_info)]
    elif event.kind == ANCILLA_LOSS_EVENT:
        modes = [layout.anc(j) for j in range(layout.n_anc)]
    else:
        raise ValueError("no-loss event has no loss operator")
    weights = event.resolved_weights(len(modes))
    total = None
    for w, mode in zip(weights, modes):
        if w == 0:
            continue
        term = embed(layout, {mode: single_mode_annihilation(layout.dims[mode])}).matrix * w
        total = term if total is None else total + term
    return Operator(layout, total)


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    """Everything one protocol run produces.

    Attributes:
        event: the injected event.
        state: post-decode normalised state of information + ancilla registers.
        collapse_norm: norm of the state right after the loss operator (1 if no loss).
        counts: the ancilla record used for classification.
        counts_probability: probability of that record.
        outcome: classification of ``counts``.
        outcome_probabilities: exact probability of each outcome class.
        recovery_applied: parity correction was applied to the info state.
        info_state: conditional (and possibly corrected) information state.
        fidelity: fidelity of ``info_state`` with the input.
        p_zero_counts: probability of the all-zero ancilla record.
        truncation_tail: largest ancilla tail mass of the in-flight state above
            ``TAIL_FRACTION`` of the truncation.
    """

    event: LossEvent
    coding: CodingSpec
    state: StateVector
    collapse_norm: float
    counts: tuple[int, ...]
    counts_probability: float
    outcome: OutcomeClass
    outcome_probabilities: dict
    recovery_applied: bool
    info_state: StateVector
    fidelity: float
    p_zero_counts: float
    truncation_tail: float

    def to_dict(self) -> dict:
        return {
            "event": self.event.to_dict(),
            "coding": self.coding.to_dict(),
            "collapse_norm": self.collapse_norm,
            "counts": list(self.counts),
            "counts_probability": self.counts_probability,
            "classification": self.outcome.to_dict(),
            "outcome_probabilities": dict(self.outcome_probabilities),
            "recovery_applied": self.recovery_applied,
            "fidelity": self.fidelity,
            "p_zero_counts": self.p_zero_counts,
            "truncation_tail": self.truncation_tail,
        }


def _resolve_anc_dims(coding: CodingSpec, anc_dims) -> tuple[int, ...]:
    if anc_dims is None:
        return (DEFAULT_ANC_DIM,) * coding.n_anc
    if isinstance(anc_dims, int):
        return (anc_dims,) * coding.n_anc
    dims = tuple(int(d) for d in anc_dims)
    if len(dims) != coding.n_anc:
        raise LayoutError(f"coding has M={coding.n_anc} ancillas but {len(dims)} truncations given")
    return dims


def transmit(
    input_info: StateVector,
    coding: CodingSpec,
    event: LossEvent,
    anc_dims=None,
    check_truncation: bool = True,
) -> tuple[StateVector, StateVector, float]:
    """Run encode, loss and decode.

    Returns:
        ``(encoded, decoded, collapse_norm)`` where ``decoded`` is normalised.

    Raises:
        ZeroNormError: the loss is impossible for this input.
    """
    if isinstance(event, (list, tuple)):
        raise ValueError("only a single loss event per transmission is supported")
    coding.check_layout(input_info.layout.with_ancillas([1] * coding.n_anc))
    psi = with_ancillas(input_info, _resolve_anc_dims(coding, anc_dims))
    layout = psi.layout
    encoded = apply(coding_unitary(layout, coding.encoder(), check_truncation), psi)
    if event.kind == NO_EVENT:
        lost, norm = encoded, 1.0
    else:
        lost = apply(collective_loss_op(layout, event), encoded)
        try:
            lost, norm = normalize(lost)
        except ZeroNormError as exc:
            raise ZeroNormError(f"impossible event: {event.kind} has zero amplitude on this input") from exc
    decoded = apply(coding_unitary(layout, coding.decoder(), check_truncation), lost)
    return encoded, decoded, norm


def _most_probable_counts(state: StateVector) -> tuple[int, ...]:
    p = count_probabilities(state)
    return tuple(int(m) for m in np.unravel_index(int(np.argmax(p)), p.shape))


def run_protocol(
    input_info: StateVector,
    coding: CodingSpec,
    event: LossEvent,
    anc_dims=None,
    seed=None,
    check_truncation: bool = True,
) -> ProtocolReport:
    """Full pipeline: ``U^-1 L U (|psi>_I (x) |0>_A)``, measure, classify, recover.

    The ancilla record is sampled with ``seed`` when given; otherwise the most
    probable record (first in lexicographic order on ties) is used.  Under PCS
    a single click on ancilla ``j`` triggers the parity correction.

    Args:
        input_info: normalised state on an information-only layout.
        coding: coding spec (its direction is ignored; encode then decode).
        event: the loss event.
        anc_dims: ancilla truncations (int or one per ancilla); default 120.
    """
    encoded, decoded, norm = transmit(input_info, coding, event, anc_dims, check_truncation)
    layout = decoded.layout
    if seed is None:
        counts = _most_probable_counts(decoded)
    else:
        counts = tuple(int(m) for m in sample_counts(decoded, seed, 1)[0])
    info_state, prob = project_counts(decoded, counts)
    outcome = classify(counts, coding)
    recovered = False
    if outcome.tag == ANCILLA_LOSS and coding.scheme == PCS:
        info_state = parity_correction(info_state, coding, outcome.mode)
        recovered = True
    p = count_probabilities(decoded)
    tail = max(
        (tail_mass(encoded, layout.anc(j), int(TAIL_FRACTION * d) - 1) for j, d in enumerate(layout.anc_dims)),
        default=0.0,
    )
    return ProtocolReport(
        event=event,
        coding=coding,
        state=decoded,
        collapse_norm=norm,
        counts=counts,
        counts_probability=prob,
        outcome=outcome,
        outcome_probabilities=outcome_probabilities(decoded),
        recovery_applied=recovered,
        info_state=info_state,
        fidelity=fidelity(info_state, input_info),
        p_zero_counts=float(p.reshape(-1)[0]),
        truncation_tail=tail,
    )


def info_distortion_after_ancilla_loss(input_info: StateVector, coding: CodingSpec, j: int) -> StateVector:
    """Conditional information state after one click on ancilla ``j``.

    Evaluated sector-diagonally: each number-basis amplitude is multiplied by
    ``sinh(2 g_j(n))`` with ``g_j(n)`` the encoding squeeze of ancilla ``j`` in
    that sector (``sum_i gamma_ij n_i`` for ECS, ``+/- strength`` for PCS).

    Raises:
        ZeroNormError: the input lies entirely in sectors with ``g_j = 0``.
    """
    if not 0 <= j < coding.n_anc:
        raise LayoutError(f"ancilla {j} out of range")
    layout = input_info.layout
    coding.check_layout(layout.with_ancillas([1] * coding.n_anc))
    enc = coding.encoder()
    factors = np.array([np.sinh(2 * enc.sector_couplings(key)[j]) for key in np.ndindex(*layout.info_dims)])
    try:
        state, _ = normalize(StateVector(layout, input_info.amps * factors))
    except ZeroNormError as exc:
        raise ZeroNormError("ancilla loss has zero amplitude: input is in the uncoupled sector") from exc
    return state


def parity_correction(state: StateVector, coding: CodingSpec, j: int) -> StateVector:
    """Apply ``Pi_j`` (parity of the information modes coupled to ancilla ``j``).

    Raises:
        UnsupportedRecoveryError: for ECS codings, which have no unitary recovery.
    """
    if coding.scheme != PCS:
        raise UnsupportedRecoveryError("parity correction is only defined for PCS coding")
    if not 0 <= j < coding.n_anc:
        raise LayoutError(f"ancilla {j} out of range")
    return apply(parity_op(state.layout, coding.gamma[:, j]), state)


def code_words(k: int, info_dim: int = 2) -> list[StateVector]:
    """The K single-photon product states ``|1 0 .. 0>, |0 1 .. 0>, ...``."""
    if k < 1:
        raise ValueError("need at least one information mode")
    layout = make_layout([info_dim] * k)
    return [basis_state(layout, [1 if i == w else 0 for i in range(k)]) for w in range(k)]


def one_to_one_coupling(k: int, gamma: float) -> np.ndarray:
    """``gamma_ij = gamma * delta_ij`` (M = K)."""
    return gamma * np.eye(k)


def symmetric_coupling(k: int, gamma: float, column: Sequence[float] | None = None) -> np.ndarray:
    """``gamma_ij = gamma * k_j``, identical for every information mode.

    ``column`` gives ``k_j`` per ancilla; default a single ancilla with ``k = 1``.
    """
    col = np.ones(1) if column is None else np.asarray(column, dtype=float)
    return gamma * np.tile(col, (k, 1))
