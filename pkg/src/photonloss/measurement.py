"""Photon counting on the ancilla register: exact distributions, projective
collapse, squeezed-vacuum statistics, seeded sampling and outcome classification."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import LayoutError, ZeroNormError
from .fock import NORM_EPS, StateVector

NO_LOSS = "NoLoss"
ANCILLA_LOSS = "AncillaLoss"
INFO_LOSS = "InfoLossDetected"
AMBIGUOUS = "Ambiguous"
OUTCOME_TAGS = (NO_LOSS, ANCILLA_LOSS, INFO_LOSS, AMBIGUOUS)

PMF_R_LIMIT = 25.0


@dataclass(frozen=True)
class CountRecord:
    counts: tuple[int, ...]
    probability: float


@dataclass(frozen=True)
class OutcomeClass:
    """Classified single-shot outcome; ``mode`` is set only for ``AncillaLoss``."""

    tag: str
    mode: int | None = None

    def __post_init__(self):
        if self.tag not in OUTCOME_TAGS:
            raise ValueError(f"unknown outcome tag {self.tag!r}")
        if (self.tag == ANCILLA_LOSS) != (self.mode is not None):
            raise ValueError("AncillaLoss (and only AncillaLoss) carries a mode")
        if self.mode is not None and self.mode < 0:
            raise ValueError("mode id must be non-negative")

    def __str__(self):
        return f"{self.tag}({self.mode})" if self.mode is not None else self.tag

    def to_dict(self) -> dict:
        return {"tag": self.tag, "mode": self.mode}


def _check_photonic(state: StateVector) -> None:
    if state.layout.aux_dims:
        raise LayoutError("photon counting is defined on photonic layouts only")
    if state.layout.n_anc == 0:
        raise LayoutError("state has no ancilla register")


def count_probabilities(state: StateVector) -> np.ndarray:
    """Joint ancilla photon-count distribution as an array of shape ``anc_dims``."""
    _check_photonic(state)
    lay = state.layout
    p = (np.abs(state.amps.reshape(lay.info_dim, lay.anc_dim)) ** 2).sum(axis=0)
    total = p.sum()
    if total <= NORM_EPS**2:
        raise ZeroNormError("cannot measure a zero-norm state")
    return (p / total).reshape(lay.anc_dims)


def count_distribution(state: StateVector) -> list[CountRecord]:
    """Every ancilla occupation pattern with its probability, in lexicographic order."""
    p = count_probabilities(state)
    return [CountRecord(tuple(int(m) for m in idx), float(p[idx])) for idx in np.ndindex(*p.shape)]


def project_counts(state: StateVector, counts: Sequence[int]) -> tuple[StateVector, float]:
    """Collapse on an ancilla count pattern.

    Returns:
        The normalised conditional state of the information register and the
        probability of the outcome.

    Raises:
        ZeroNormError: the outcome has zero probability.
    """
    _check_photonic(state)
    lay = state.layout
    counts = tuple(int(m) for m in counts)
    if len(counts) != lay.n_anc or any(not 0 <= m < d for m, d in zip(counts, lay.anc_dims)):
        raise LayoutError(f"counts {counts} outside the ancilla truncation {lay.anc_dims}")
    col = int(np.ravel_multi_index(counts, lay.anc_dims))
    branch = state.amps.reshape(lay.info_dim, lay.anc_dim)[:, col]
    total = state.norm**2
    prob = float(np.vdot(branch, branch).real / total)
    bn = np.linalg.norm(branch)
    if bn <= NORM_EPS:
        raise ZeroNormError(f"count outcome {counts} has zero probability")
    return StateVector(lay.info_layout(), branch / bn), prob


def squeezed_vacuum_pmf(r: float, m: int) -> float:
    """Photon-number probability ``P(m)`` of a squeezed vacuum of magnitude ``r``.

    ``P(m) = m! tanh^m(r) / (2^m ((m/2)!)^2 cosh r)`` for even ``m`` and 0 for odd
    ``m``.  The squeezer ``exp(-i g (b^dagger^2 + b^2))`` has ``r = 2 g``; the
    distribution does not depend on the sign of ``r``.
    """
    if m < 0:
        raise ValueError("photon number must be non-negative")
    if not abs(r) < PMF_R_LIMIT:
        raise ValueError(f"|r| must be below {PMF_R_LIMIT} to avoid overflow")
    if m % 2:
        return 0.0
    r = abs(r)
    if r == 0.0:
        return 1.0 if m == 0 else 0.0
    k = m // 2
    log_p = gammaln(m + 1) - 2 * gammaln(k + 1) - m * math.log(2) + m * math.log(math.tanh(r)) - math.log(math.cosh(r))
    return float(math.exp(log_p))


def squeezed_vacuum_pmf_printed(x: float, m: int) -> float:
    """The closed form as printed with ``tanh x``:
    ``(1 + (-1)^m) m! sqrt(1 - tanh^2 x) tanh^m x / ((m/2)!^2 2^(m+1))``.

    Identical to :func:`squeezed_vacuum_pmf` with ``r = x``; the argument that
    should be fed in for a given coupling is what the convention ledger decides.
    """
    if m % 2:
        return 0.0
    t = math.tanh(abs(x))
    k = m // 2
    if t == 0.0:
        return 1.0 if m == 0 else 0.0
    log_p = gammaln(m + 1) - 2 * gammaln(k + 1) - (m + 1) * math.log(2) + m * math.log(t) + 0.5 * math.log1p(-t * t)
    return float(2.0 * math.exp(log_p))


def classify(counts: Sequence[int], coding=None) -> OutcomeClass:
    """Classify one shot of ancilla counts.

    all zero -> NoLoss; a single 1 -> AncillaLoss(mode); a single even count
    >= 2 -> InfoLossDetected; anything else -> Ambiguous.
    """
    counts = [int(m) for m in counts]
    if coding is not None and len(counts) != coding.n_anc:
        raise LayoutError(f"expected {coding.n_anc} counts, got {len(counts)}")
    nonzero = [j for j, m in enumerate(counts) if m != 0]
    if not nonzero:
        return OutcomeClass(NO_LOSS)
    if len(nonzero) == 1:
        j = nonzero[0]
        if counts[j] == 1:
            return OutcomeClass(ANCILLA_LOSS, j)
        if counts[j] % 2 == 0:
            return OutcomeClass(INFO_LOSS)
    return OutcomeClass(AMBIGUOUS)


def outcome_probabilities(state: StateVector) -> dict[str, float]:
    """Total probability of each outcome class (AncillaLoss summed over modes)."""
    p = count_probabilities(state)
    totals = dict.fromkeys(OUTCOME_TAGS, 0.0)
    for idx in zip(*np.nonzero(p)):
        totals[classify(idx).tag] += float(p[idx])
    return totals


def ancilla_loss_probabilities(state: StateVector) -> np.ndarray:
    """Probability of the single-click outcome on each ancilla mode."""
    p = count_probabilities(state)
    m = state.layout.n_anc
    out = np.zeros(m)
    for j in range(m):
        idx = [0] * m
        if p.shape[j] > 1:
            idx[j] = 1
            out[j] = p[tuple(idx)]
    return out


def mean_counts(state: StateVector) -> np.ndarray:
    """Mean photon number of each ancilla mode."""
    p = count_probabilities(state)
    means = []
    for j in range(p.ndim):
        marg = p.sum(axis=tuple(a for a in range(p.ndim) if a != j))
        means.append(float(np.arange(marg.size) @ marg))
    return np.array(means)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_counts(state: StateVector, seed, n_shots: int) -> np.ndarray:
    """Draw ``n_shots`` i.i.d. count patterns by inverse-CDF sampling.

    The CDF runs over patterns in lexicographic order, so results depend only
    on the state and the seed (an int or a ``numpy.random.Generator``).

    Returns:
        Integer array of shape ``(n_shots, M)``.
    """
    if n_shots < 0:
        raise ValueError("n_shots must be non-negative")
    p = count_probabilities(state)
    cdf = np.cumsum(p.reshape(-1))
    cdf /= cdf[-1]
    u = _rng(seed).random(n_shots)
    flat = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return np.stack(np.unravel_index(flat, p.shape), axis=1).astype(int)


def empirical_distribution(samples: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    samples = np.asarray(samples, dtype=int)
    flat = np.ravel_multi_index(tuple(samples.T), tuple(shape))
    hist = np.bincount(flat, minlength=math.prod(shape)).astype(float)
    return (hist / max(len(samples), 1)).reshape(shape)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def write_distribution_csv(records: Iterable[CountRecord], fh: IO[str], min_probability: float = 0.0) -> None:
    """CSV with columns ``m_1..m_M, probability``; floats use shortest round-trip repr."""
    records = list(records)
    if not records:
        raise ValueError("empty distribution")
    m = len(records[0].counts)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"m_{j + 1}" for j in range(m)] + ["probability"])
    for rec in records:
        if rec.probability > min_probability or rec.probability == 1.0:
            w.writerow(list(rec.counts) + [repr(rec.probability)])


def write_samples_csv(samples: np.ndarray, fh: IO[str]) -> None:
    samples = np.asarray(samples, dtype=int)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"m_{j + 1}" for j in range(samples.shape[1])])
    w.writerows(samples.tolist())


@dataclass(frozen=True)
class NoClickReport:
    """Exact no-click probability after an information-photon loss plus companions.

    ``sech_form`` is the squeezed-vacuum overlap ``prod_j sech(2 g_ij)`` weighted
    by ``|alpha_i|^2``; ``printed_form`` evaluates ``2 e^{-|g|} / (1 + e^{-|g|})``
    per factor.  Only ``exact`` is authoritative.
    """

    exact: float
    sech_form: float
    printed_form: float

    @property
    def printed_form_mismatch(self) -> float:
        return abs(self.exact - self.printed_form)


def no_click_report(coding, event=None, input_info: StateVector | None = None, anc_dims=None) -> NoClickReport:
    """Evaluate P0 through the full encode-loss-decode pipeline.

    Defaults: input with one photon in every information mode (the single-mode
    case is ``|1>``), uniform loss weights over the information modes.
    """
    from .fock import basis_state, make_layout
    from .gates import ECS
    from .protocol import INFO_LOSS_EVENT, LossEvent, run_protocol

    k = coding.n_info
    if input_info is None:
        input_info = basis_state(make_layout([2] * k), [1] * k)
    if event is None:
        event = LossEvent(INFO_LOSS_EVENT)
    if event.kind != INFO_LOSS_EVENT:
        raise ValueError("no-click probability is defined for information loss")
    report = run_protocol(input_info, coding, event, anc_dims=anc_dims)
    p = count_probabilities(report.state)
    exact = float(p.reshape(-1)[0])

    enc = coding.encoder()
    weights = np.abs(event.resolved_weights(k)) ** 2
    sech_terms, printed_terms = [], []
    for i in range(k):
        if enc.scheme == ECS:
            g = enc.gamma[i]
        else:
            # one lost photon flips the parity of every coupled ancilla: net squeeze 2*strength
            g = 2 * enc.strength * enc.gamma[i]
        sech_terms.append(np.prod(1.0 / np.cosh(2 * np.abs(g))))
        printed_terms.append(np.prod(2 * np.exp(-np.abs(g)) / (1 + np.exp(-np.abs(g)))))
    return NoClickReport(exact, float(weights @ sech_terms), float(weights @ printed_terms))


def no_click_probability(coding, event=None, input_info: StateVector | None = None, anc_dims=None) -> float:
    """Exact probability of an all-zero ancilla record after an information loss."""
    return no_click_report(coding, event, input_info, anc_dims).exact
