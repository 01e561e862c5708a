"""Gate builders: number/parity operators, squeezers, ECS/PCS coding unitaries,
quadratures, Gaussian and cubic phase gates.

Squeeze convention used throughout the package: a single-mode squeezer is
``S(g) = exp(-i g (b^dagger^2 + b^2))``.  Acting on the vacuum it gives a
squeezed vacuum of squeeze magnitude ``r = 2|g|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .errors import CodingError, LayoutError, TruncationError
from .fock import (
    ModeLayout,
    Operator,
    embed,
    expm_hermitian,
    single_mode_annihilation,
)

ECS = "ECS"
PCS = "PCS"
ENCODE = "encode"
DECODE = "decode"


@dataclass(frozen=True, eq=False)
class CodingSpec:
    """Which controlled-squeezing coding to apply and in which direction.

    Attributes:
        scheme: ``"ECS"`` (energy controlled) or ``"PCS"`` (parity controlled).
        gamma: K x M coupling matrix; real for ECS, binary for PCS.
        strength: squeeze strength for PCS; ignored by ECS.
        direction: ``"encode"`` or ``"decode"`` (the exact inverse).
    """

    scheme: str
    gamma: np.ndarray
    strength: float = 0.0
    direction: str = ENCODE

    def __post_init__(self):
        if self.scheme not in (ECS, PCS):
            raise CodingError(f"scheme must be ECS or PCS, got {self.scheme!r}")
        if self.direction not in (ENCODE, DECODE):
            raise CodingError(f"direction must be encode or decode, got {self.direction!r}")
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or 0 in g.shape:
            raise CodingError(f"gamma must be a non-empty K x M matrix, got shape {g.shape}")
        if not np.all(np.isfinite(g)) or not math.isfinite(self.strength):
            raise CodingError("coupling values must be finite")
        if self.scheme == PCS and not np.all((g == 0) | (g == 1)):
            raise CodingError("PCS coupling matrix must be binary")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "strength", float(self.strength))

    @property
    def n_info(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_anc(self) -> int:
        return self.gamma.shape[1]

    @property
    def sign(self) -> int:
        return 1 if self.direction == ENCODE else -1

    def inverse(self) -> "CodingSpec":
        flipped = DECODE if self.direction == ENCODE else ENCODE
        return CodingSpec(self.scheme, self.gamma, self.strength, flipped)

    def encoder(self) -> "CodingSpec":
        return self if self.direction == ENCODE else self.inverse()

    def decoder(self) -> "CodingSpec":
        return self if self.direction == DECODE else self.inverse()

    def sector_couplings(self, occupations: Sequence[int]) -> np.ndarray:
        """Squeeze parameters ``g_j`` of each ancilla for one information sector.

        ECS: ``g_j = sum_i gamma_ij n_i``; PCS: ``g_j = strength * parity_j``.
        Decoding flips the sign.
        """
        n = np.asarray(occupations, dtype=float)
        if n.shape != (self.n_info,):
            raise CodingError(f"expected {self.n_info} information occupations")
        if self.scheme == ECS:
            g = n @ self.gamma
        else:
            g = self.strength * (1.0 - 2.0 * ((n @ self.gamma).astype(int) % 2))
        return self.sign * g

    def check_layout(self, layout: ModeLayout) -> None:
        if (layout.n_info, layout.n_anc) != self.gamma.shape:
            raise LayoutError(
                f"coding is {self.gamma.shape[0]}x{self.gamma.shape[1]} but layout has "
                f"K={layout.n_info}, M={layout.n_anc}"
            )

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "gamma": self.gamma.tolist(),
            "strength": self.strength,
            "direction": self.direction,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CodingSpec":
        return cls(d["scheme"], d["gamma"], d.get("strength", 0.0), d.get("direction", ENCODE))

    def __eq__(self, other):
        if not isinstance(other, CodingSpec):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.direction == other.direction
            and self.strength == other.strength
            and np.array_equal(self.gamma, other.gamma)
        )

    def __hash__(self):
        return hash((self.scheme, self.direction, self.strength, self.gamma.tobytes()))


# ---------------------------------------------------------------------------
# single-mode building blocks
# ---------------------------------------------------------------------------


def quadratures(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``q = (a + a^dagger)/sqrt2`` and ``p = -i (a - a^dagger)/sqrt2``."""
    a = single_mode_annihilation(dim)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2), -1j * (a - ad) / np.sqrt(2)


def squeeze_generator_matrix(dim: int) -> np.ndarray:
    """``b^dagger^2 + b^2`` on one truncated mode (real symmetric)."""
    a = single_mode_annihilation(dim).real
    return a.T @ a.T + a @ a


@lru_cache(maxsize=64)
def _squeeze_eigensystem(dim: int) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(squeeze_generator_matrix(dim))
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


@lru_cache(maxsize=4096)
def squeezer(dim: int, g: float) -> np.ndarray:
    """``exp(-i g (b^dagger^2 + b^2))`` on one truncated mode."""
    w, v = _squeeze_eigensystem(dim)
    u = (v * np.exp(-1j * g * w)) @ v.T
    u.setflags(write=False)
    return u


def squeeze_truncation_ok(g: float, dim: int) -> bool:
    """Heuristic adequacy test for a squeezer acting on the vacuum.

    With ``r = 2|g|`` the squeezed vacuum has mean photon number ``sinh^2 r`` and
    spread of order ``sinh r cosh r``; require ``sinh^2 r + 6 sinh r cosh r < dim``.
    """
    r = 2.0 * abs(g)
    return math.sinh(r) ** 2 + 6.0 * math.sinh(r) * math.cosh(r) < dim


def check_squeeze_truncation(g: float, dim: int) -> None:
    if not squeeze_truncation_ok(g, dim):
        raise TruncationError(
            f"squeeze parameter g={g:.4g} (r={2 * abs(g):.4g}) needs more than {dim} Fock levels"
        )


# ---------------------------------------------------------------------------
# layout-level operators
# ---------------------------------------------------------------------------


def number_op(layout: ModeLayout, mode: int) -> Operator:
    layout.check_mode(mode)
    d = layout.dims[mode]
    return embed(layout, {mode: np.diag(np.arange(d, dtype=complex))})


def _binary_column(layout: ModeLayout, column: Sequence[int]) -> np.ndarray:
    col = np.asarray(column)
    if col.shape != (layout.n_info,):
        raise CodingError(f"parity column must have length K={layout.n_info}")
    if not np.all((col == 0) | (col == 1)):
        raise CodingError("parity column must be binary")
    return col.astype(int)


def parity_diagonal(layout: ModeLayout, column: Sequence[int]) -> np.ndarray:
    """Eigenvalues (+1/-1) of the parity operator over the full basis."""
    col = _binary_column(layout, column)
    occ = np.indices(layout.dims).reshape(layout.n_modes, -1)
    total = (col[:, None] * occ[: layout.n_info]).sum(axis=0)
    return np.where(total % 2 == 0, 1.0, -1.0)


def parity_op(layout: ModeLayout, column: Sequence[int]) -> Operator:
    """``(-1)^(sum_i c_i n_i)`` for a binary column ``c`` over the information modes."""
    diag = parity_diagonal(layout, column)
    return Operator(layout, sp.diags(diag.astype(complex), format="csr"), unitary=True)


def squeeze_generator(layout: ModeLayout, anc_mode: int) -> Operator:
    """``b^dagger^2 + b^2`` on the ancilla with global mode id ``anc_mode``."""
    layout.check_mode(anc_mode)
    if not layout.is_anc(anc_mode):
        raise LayoutError(f"mode {anc_mode} is not an ancilla mode")
    return embed(layout, {anc_mode: squeeze_generator_matrix(layout.dims[anc_mode])})


def coding_generator(layout: ModeLayout, coding: CodingSpec) -> Operator:
    """The full (sparse) Hermitian generator ``S`` with ``U = exp(-i S)`` for encoding.

    This is the direct, non-sector-wise construction; it is used as a reference
    for the block-diagonal builders.
    """
    coding.check_layout(layout)
    total = sp.csr_matrix((layout.total_dim, layout.total_dim), dtype=complex)
    for j in range(layout.n_anc):
        g_j = squeeze_generator(layout, layout.anc(j)).matrix
        if coding.scheme == ECS:
            control = sum(
                coding.gamma[i, j] * number_op(layout, layout.info(i)).matrix
                for i in range(layout.n_info)
                if coding.gamma[i, j] != 0
            )
            if isinstance(control, int):
                continue
        else:
            control = coding.strength * parity_op(layout, coding.gamma[:, j]).matrix
        total = total + control @ g_j
    return Operator(layout, total * coding.sign)


def _coding_blocks(layout: ModeLayout, coding: CodingSpec, check_truncation: bool) -> Operator:
    coding.check_layout(layout)
    blocks = {}
    for key in np.ndindex(*layout.info_dims):
        g = coding.sector_couplings(key)
        factors = []
        for j, (gj, d) in enumerate(zip(g, layout.anc_dims)):
            if gj == 0:
                factors.append(None)
                continue
            if check_truncation:
                check_squeeze_truncation(gj, d)
            factors.append(squeezer(d, float(gj)))
        blocks[key] = tuple(factors)
    return Operator(layout, None, blocks, unitary=True)


def ecs_unitary(layout: ModeLayout, coding: CodingSpec, check_truncation: bool = True) -> Operator:
    """Energy controlled-squeezing unitary, built sector by sector.

    In the information sector with occupations ``n`` the ancilla block is
    ``prod_j exp(-i g_j(n) (b_j^dagger^2 + b_j^2))`` with ``g_j(n) = sum_i gamma_ij n_i``
    (sign flipped for decoding).

    Raises:
        TruncationError: some sector squeezes an ancilla beyond its truncation.
    """
    if coding.scheme != ECS:
        raise CodingError("ecs_unitary needs an ECS coding")
    return _coding_blocks(layout, coding, check_truncation)


def pcs_unitary(layout: ModeLayout, coding: CodingSpec, check_truncation: bool = True) -> Operator:
    """Parity controlled-squeezing unitary ``exp(-/+ i strength sum_j Pi_j (b_j^dagger^2 + b_j^2))``."""
    if coding.scheme != PCS:
        raise CodingError("pcs_unitary needs a PCS coding")
    return _coding_blocks(layout, coding, check_truncation)


def coding_unitary(layout: ModeLayout, coding: CodingSpec, check_truncation: bool = True) -> Operator:
    if coding.scheme == ECS:
        return ecs_unitary(layout, coding, check_truncation)
    return pcs_unitary(layout, coding, check_truncation)


def quadrature_op(layout: ModeLayout, mode: int, which: str) -> Operator:
    layout.check_mode(mode)
    q, p = quadratures(layout.dims[mode])
    if which == "q":
        return embed(layout, {mode: q})
    if which == "p":
        return embed(layout, {mode: p})
    raise ValueError(f"which must be 'q' or 'p', got {which!r}")


@dataclass(frozen=True)
class QuadraticForm:
    """Real single-mode polynomial
    ``qq q^2 + pp p^2 + qp (qp + pq)/2 + q q + p p + c``.

    The cross term is Weyl (symmetrically) ordered.
    """

    qq: float = 0.0
    pp: float = 0.0
    qp: float = 0.0
    q: float = 0.0
    p: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        for name in ("qq", "pp", "qp", "q", "p", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"coefficient {name} is not finite")
            object.__setattr__(self, name, v)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.qq, self.pp, self.qp, self.q, self.p, self.c])

    @classmethod
    def from_coefficients(cls, v: Sequence[float]) -> "QuadraticForm":
        return cls(*[float(x) for x in v])

    @property
    def quadratic_block(self) -> np.ndarray:
        """Symmetric 2x2 matrix ``A`` with quadratic part ``x^T A x``, ``x = (q, p)``."""
        return np.array([[self.qq, self.qp / 2], [self.qp / 2, self.pp]])

    @property
    def linear_part(self) -> np.ndarray:
        return np.array([self.q, self.p])

    @classmethod
    def from_parts(cls, a: np.ndarray, b: np.ndarray, c: float) -> "QuadraticForm":
        a = (np.asarray(a) + np.asarray(a).T) / 2
        return cls(a[0, 0], a[1, 1], 2 * a[0, 1], b[0], b[1], c)

    def substituted(self, m: np.ndarray, d: np.ndarray) -> "QuadraticForm":
        """The form evaluated at ``x -> M x + d``."""
        a, b = self.quadratic_block, self.linear_part
        return QuadraticForm.from_parts(
            m.T @ a @ m, 2 * m.T @ a @ d + m.T @ b, float(d @ a @ d + b @ d + self.c)
        )

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm.from_coefficients(self.coefficients + other.coefficients)

    def __mul__(self, s: float) -> "QuadraticForm":
        return QuadraticForm.from_coefficients(self.coefficients * s)

    __rmul__ = __mul__

    def matrix(self, dim: int) -> np.ndarray:
        """Hermitian operator on one truncated mode (products of truncated q, p)."""
        q, p = quadratures(dim)
        return (
            self.qq * (q @ q)
            + self.pp * (p @ p)
            + self.qp * (q @ p + p @ q) / 2
            + self.q * q
            + self.p * p
            + self.c * np.eye(dim)
        )


def gaussian_gate(layout: ModeLayout, mode: int, form: QuadraticForm) -> Operator:
    """``exp(i F(q, p))`` on one mode for a quadratic form ``F``."""
    layout.check_mode(mode)
    u = expm_hermitian(form.matrix(layout.dims[mode]))
    op = embed(layout, {mode: u})
    return Operator(layout, op.matrix, unitary=True)


def cubic_phase_matrix(dim: int, strength: float) -> np.ndarray:
    q, _ = quadratures(dim)
    return expm_hermitian(q @ q @ q, strength)


def cubic_phase_gate(layout: ModeLayout, mode: int, strength: float) -> Operator:
    """``exp(i strength q^3)`` on one mode."""
    layout.check_mode(mode)
    op = embed(layout, {mode: cubic_phase_matrix(layout.dims[mode], strength)})
    return Operator(layout, op.matrix, unitary=True)


class ProductExponential(LinearOperator):
    """``exp(i c A (x) B)`` for Hermitian single-mode ``A`` (mode ``ma``) and ``B`` (mode ``mb``).

    Applied through the eigenbases of the two factors, so the full matrix is
    never formed.  Identity on every other mode.
    """

    def __init__(self, layout: ModeLayout, ma: int, a: np.ndarray, mb: int, b: np.ndarray, coeff: float = 1.0):
        if ma == mb:
            raise LayoutError("product exponential needs two distinct modes")
        n = layout.total_dim
        super().__init__(dtype=complex, shape=(n, n))
        self.layout, self.ma, self.mb, self.coeff = layout, ma, mb, coeff
        self.wa, self.va = np.linalg.eigh(a)
        self.wb, self.vb = np.linalg.eigh(b)
        self._phase = np.exp(1j * coeff * np.outer(self.wa, self.wb))

    def _transform(self, x: np.ndarray, phase: np.ndarray) -> np.ndarray:
        dims = self.layout.dims
        k = x.shape[1]
        t = x.reshape(dims + (k,))
        ma, mb = self.ma, self.mb
        t = np.moveaxis(np.tensordot(self.va.conj().T, t, axes=([1], [ma])), 0, ma)
        t = np.moveaxis(np.tensordot(self.vb.conj().T, t, axes=([1], [mb])), 0, mb)
        shape = [1] * (len(dims) + 1)
        shape[ma], shape[mb] = dims[ma], dims[mb]
        ph = phase if ma < mb else phase.T
        t = t * ph.reshape(shape)
        t = np.moveaxis(np.tensordot(self.va, t, axes=([1], [ma])), 0, ma)
        t = np.moveaxis(np.tensordot(self.vb, t, axes=([1], [mb])), 0, mb)
        return t.reshape(-1, k)

    def _matmat(self, x):
        return self._transform(np.asarray(x, dtype=complex), self._phase)

    def _rmatmat(self, x):
        return self._transform(np.asarray(x, dtype=complex), self._phase.conj())

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).reshape(-1)

    def _rmatvec(self, x):
        return self._rmatmat(np.asarray(x).reshape(-1, 1)).reshape(-1)


def product_exponential(
    layout: ModeLayout, ma: int, a: np.ndarray, mb: int, b: np.ndarray, coeff: float = 1.0
) -> Operator:
    layout.check_mode(ma)
    layout.check_mode(mb)
    return Operator(layout, ProductExponential(layout, ma, a, mb, b, coeff), unitary=True)


def seed_factor(dim: int) -> np.ndarray:
    """``q + p`` on one truncated mode."""
    q, p = quadratures(dim)
    return q + p


def two_mode_seed(layout: ModeLayout, modes: tuple[int, int] | None = None) -> Operator:
    """``exp(i (q_a + p_a) (x) (q_b + p_b))``.

    By default mode ``a`` is information mode 0 and mode ``b`` is ancilla mode 0.
    """
    if modes is None:
        if layout.n_anc < 1:
            raise LayoutError("two_mode_seed needs an ancilla mode")
        modes = (layout.info(0), layout.anc(0))
    ma, mb = modes
    layout.check_mode(ma)
    layout.check_mode(mb)
    return product_exponential(
        layout, ma, seed_factor(layout.dims[ma]), mb, seed_factor(layout.dims[mb])
    )


def two_mode_seed_generator(layout: ModeLayout, modes: tuple[int, int] | None = None) -> Operator:
    if modes is None:
        modes = (layout.info(0), layout.anc(0))
    ma, mb = modes
    return embed(layout, {ma: seed_factor(layout.dims[ma]), mb: seed_factor(layout.dims[mb])})
