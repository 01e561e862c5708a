"""Truncated multi-mode Fock space: layouts, states, operators.

Index convention: information modes first, then ancilla modes, then any
auxiliary (non-bosonic, e.g. two-level) factors; multi-indices are flattened
row-major, so the last mode varies fastest.

Operators are hard-truncated: the creation operator maps the top level of a
mode to zero.  Consequently ``[a, a^dagger] = I`` holds on every level except
the top one, where the commutator equals ``-(d - 1)`` (see ``commutator_defect``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .errors import DimensionCapError, LayoutError, ZeroNormError

DEFAULT_MAX_AMPLITUDES = 2**21
NORM_EPS = 1e-14
# largest dimension we are willing to materialise as a dense matrix
DENSE_CAP = 4096

ANNIHILATE = "annihilate"
CREATE = "create"


@dataclass(frozen=True)
class ModeLayout:
    """Registry of information, ancilla and auxiliary modes.

    Attributes:
        info_dims: truncation size of each of the K information modes.
        anc_dims: truncation size of each of the M ancilla modes.
        aux_dims: sizes of auxiliary factors appended after the ancillas
            (used for the two-level mediator); empty for plain photonic layouts.
    """

    info_dims: tuple[int, ...]
    anc_dims: tuple[int, ...] = ()
    aux_dims: tuple[int, ...] = ()

    @property
    def dims(self) -> tuple[int, ...]:
        return self.info_dims + self.anc_dims + self.aux_dims

    @property
    def n_info(self) -> int:
        return len(self.info_dims)

    @property
    def n_anc(self) -> int:
        return len(self.anc_dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def info_dim(self) -> int:
        return math.prod(self.info_dims)

    @property
    def anc_dim(self) -> int:
        return math.prod(self.anc_dims)

    def info(self, i: int) -> int:
        """Global mode id of information mode ``i``."""
        if not 0 <= i < self.n_info:
            raise LayoutError(f"information mode {i} out of range (K={self.n_info})")
        return i

    def anc(self, j: int) -> int:
        """Global mode id of ancilla mode ``j``."""
        if not 0 <= j < self.n_anc:
            raise LayoutError(f"ancilla mode {j} out of range (M={self.n_anc})")
        return self.n_info + j

    def aux(self, k: int) -> int:
        if not 0 <= k < len(self.aux_dims):
            raise LayoutError(f"auxiliary factor {k} out of range")
        return self.n_info + self.n_anc + k

    def is_anc(self, mode: int) -> bool:
        return self.n_info <= mode < self.n_info + self.n_anc

    def mode_dim(self, mode: int) -> int:
        self.check_mode(mode)
        return self.dims[mode]

    def check_mode(self, mode: int) -> None:
        if not isinstance(mode, (int, np.integer)) or not 0 <= mode < self.n_modes:
            raise LayoutError(f"invalid mode id {mode!r} for layout with {self.n_modes} modes")

    def flatten(self, occupations: Sequence[int]) -> int:
        occ = tuple(int(n) for n in occupations)
        if len(occ) != self.n_modes:
            raise LayoutError(f"expected {self.n_modes} occupations, got {len(occ)}")
        for mode, (n, d) in enumerate(zip(occ, self.dims)):
            if not 0 <= n < d:
                raise LayoutError(f"occupation {n} out of range for mode {mode} (dim {d})")
        return int(np.ravel_multi_index(occ, self.dims))

    def unflatten(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.total_dim:
            raise LayoutError(f"basis index {index} out of range")
        return tuple(int(n) for n in np.unravel_index(index, self.dims))

    def info_layout(self) -> "ModeLayout":
        return ModeLayout(self.info_dims)

    def with_ancillas(self, anc_dims: Sequence[int]) -> "ModeLayout":
        return make_layout(self.info_dims, anc_dims, self.aux_dims)

    def to_dict(self) -> dict:
        d = {"info_dims": list(self.info_dims), "anc_dims": list(self.anc_dims)}
        if self.aux_dims:
            d["aux_dims"] = list(self.aux_dims)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModeLayout":
        return make_layout(d["info_dims"], d.get("anc_dims", ()), d.get("aux_dims", ()))


def make_layout(
    info_dims: Sequence[int],
    anc_dims: Sequence[int] = (),
    aux_dims: Sequence[int] = (),
    max_amplitudes: int = DEFAULT_MAX_AMPLITUDES,
) -> ModeLayout:
    """Validate dimensions and build a layout.

    Raises:
        LayoutError: no information modes, or a dimension below 1.
        DimensionCapError: the product of dimensions exceeds ``max_amplitudes``.
    """
    info = tuple(int(d) for d in info_dims)
    anc = tuple(int(d) for d in anc_dims)
    aux = tuple(int(d) for d in aux_dims)
    if not info:
        raise LayoutError("layout needs at least one information mode")
    for d in info + anc + aux:
        if d < 1:
            raise LayoutError(f"mode dimension must be >= 1, got {d}")
    total = math.prod(info + anc + aux)
    if total > max_amplitudes:
        raise DimensionCapError(
            f"total dimension {total} exceeds the cap of {max_amplitudes} amplitudes"
        )
    return ModeLayout(info, anc, aux)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state over a layout; ``amps`` is indexed by the flattened multi-index."""

    layout: ModeLayout
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise LayoutError(
                f"amplitude vector has length {amps.shape[0]}, layout needs {self.layout.total_dim}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm**2 - 1.0) <= tol

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per mode."""
        return self.amps.reshape(self.layout.dims)

    def _check(self, other: "StateVector") -> None:
        if other.layout != self.layout:
            raise LayoutError("states live on different layouts")

    def __add__(self, other: "StateVector") -> "StateVector":
        self._check(other)
        return StateVector(self.layout, self.amps + other.amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        self._check(other)
        return StateVector(self.layout, self.amps - other.amps)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.layout, self.amps * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "StateVector":
        return StateVector(self.layout, self.amps / scalar)

    def to_dict(self) -> dict:
        return {
            "layout": self.layout.to_dict(),
            "amps": [[float(a.real), float(a.imag)] for a in self.amps],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StateVector":
        layout = ModeLayout.from_dict(d["layout"])
        pairs = np.asarray(d["amps"], dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("amps must be a list of [re, im] pairs")
        return cls(layout, pairs[:, 0] + 1j * pairs[:, 1])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        return cls.from_dict(json.loads(text))


def basis_state(layout: ModeLayout, occupations: Sequence[int]) -> StateVector:
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[layout.flatten(occupations)] = 1.0
    return StateVector(layout, amps)


def vacuum(layout: ModeLayout) -> StateVector:
    return basis_state(layout, [0] * layout.n_modes)


def random_state(layout: ModeLayout, rng: np.random.Generator) -> StateVector:
    """Haar-like random pure state (normalised complex Gaussian vector)."""
    z = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return StateVector(layout, z / np.linalg.norm(z))


def with_ancillas(
    info_state: StateVector, anc_dims: Sequence[int], anc_amps: np.ndarray | None = None
) -> StateVector:
    """Embed an information-register state into a larger layout.

    The ancilla register is put in ``anc_amps`` (flattened over ``anc_dims``),
    or in the vacuum when omitted.
    """
    if info_state.layout.anc_dims or info_state.layout.aux_dims:
        raise LayoutError("info_state must live on an information-only layout")
    layout = info_state.layout.with_ancillas(anc_dims)
    if anc_amps is None:
        anc = np.zeros(layout.anc_dim, dtype=complex)
        anc[0] = 1.0
    else:
        anc = np.asarray(anc_amps, dtype=complex).reshape(-1)
        if anc.shape[0] != layout.anc_dim:
            raise LayoutError("ancilla amplitudes do not match anc_dims")
    return StateVector(layout, np.kron(info_state.amps, anc))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

Blocks = Mapping[tuple[int, ...], tuple["np.ndarray | None", ...]]


@dataclass(frozen=True, eq=False)
class Operator:
    """Linear operator on a layout's Hilbert space.

    ``matrix`` is a dense array, a scipy sparse matrix, or a scipy
    ``LinearOperator`` for structured operators too large to materialise.

    ``blocks`` optionally gives an information-sector block-diagonal form: for
    every information occupation tuple, a tuple of single-mode matrices (one
    per ancilla mode, ``None`` meaning identity) whose Kronecker product is the
    ancilla block of that sector.  When present it is authoritative and
    ``matrix`` may be ``None``.
    """

    layout: ModeLayout
    matrix: object = None
    blocks: Blocks | None = None
    unitary: bool = False

    def __post_init__(self):
        if self.matrix is None and self.blocks is None:
            raise ValueError("operator needs a matrix or a block representation")
        if self.matrix is not None and self.matrix.shape != (self.layout.total_dim,) * 2:
            raise LayoutError(f"matrix shape {self.matrix.shape} does not match layout")
        if self.blocks is not None:
            if self.layout.aux_dims:
                raise LayoutError("block form is only defined for photonic layouts")
            missing = set(np.ndindex(*self.layout.info_dims)) - set(self.blocks)
            if missing:
                raise ValueError(f"block form lacks sectors {sorted(missing)[:3]}...")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.layout.total_dim, self.layout.total_dim)

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector of length ``total_dim`` or to its columns."""
        x = np.asarray(x, dtype=complex)
        if x.shape[0] != self.layout.total_dim:
            raise LayoutError("array does not match the operator layout")
        if self.blocks is not None:
            return _apply_blocks(self.layout, self.blocks, x)
        return np.asarray(self.matrix @ x)

    def dagger(self) -> "Operator":
        blocks = None
        if self.blocks is not None:
            blocks = {
                key: tuple(None if f is None else f.conj().T for f in factors)
                for key, factors in self.blocks.items()
            }
        matrix = None
        if self.matrix is not None:
            matrix = self.matrix.H if isinstance(self.matrix, LinearOperator) else self.matrix.conj().T
        return Operator(self.layout, matrix, blocks, self.unitary)

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.layout != self.layout:
            raise LayoutError("operators live on different layouts")
        unitary = self.unitary and other.unitary
        if self.blocks is not None and other.blocks is not None:
            blocks = {
                key: tuple(
                    _mul_factor(f, g) for f, g in zip(self.blocks[key], other.blocks[key])
                )
                for key in self.blocks
            }
            return Operator(self.layout, None, blocks, unitary)
        a, b = self._as_matrix(), other._as_matrix()
        if isinstance(a, LinearOperator) or isinstance(b, LinearOperator):
            return Operator(self.layout, aslinearoperator(a) @ aslinearoperator(b), None, unitary)
        return Operator(self.layout, a @ b, None, unitary)

    def __add__(self, other: "Operator") -> "Operator":
        if other.layout != self.layout:
            raise LayoutError("operators live on different layouts")
        a, b = self._as_matrix(), other._as_matrix()
        if isinstance(a, LinearOperator) or isinstance(b, LinearOperator):
            return Operator(self.layout, aslinearoperator(a) + aslinearoperator(b))
        return Operator(self.layout, a + b)

    def __sub__(self, other: "Operator") -> "Operator":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.layout, self._as_matrix() * scalar)

    __rmul__ = __mul__

    def _as_matrix(self):
        if self.matrix is not None:
            return self.matrix
        return self.to_sparse()

    def to_sparse(self) -> sp.csr_matrix:
        """Sparse matrix form; block factors are expanded with Kronecker products."""
        if self.matrix is not None and not isinstance(self.matrix, LinearOperator):
            return sp.csr_matrix(self.matrix)
        if self.blocks is None:
            raise ValueError("lazy operator has no sparse form; use to_dense()")
        sectors = []
        for key in np.ndindex(*self.layout.info_dims):
            mats = [
                sp.identity(d, dtype=complex, format="csr") if f is None else sp.csr_matrix(f)
                for f, d in zip(self.blocks[key], self.layout.anc_dims)
            ]
            sectors.append(reduce(lambda x, y: sp.kron(x, y, format="csr"), mats, sp.identity(1, dtype=complex, format="csr")))
        return sp.block_diag(sectors, format="csr")

    def to_dense(self) -> np.ndarray:
        n = self.layout.total_dim
        if n > DENSE_CAP:
            raise DimensionCapError(f"refusing to densify a {n}x{n} operator")
        if isinstance(self.matrix, np.ndarray):
            return self.matrix
        if self.matrix is None or sp.issparse(self.matrix):
            return self.to_sparse().toarray()
        return np.asarray(self.matrix @ np.eye(n, dtype=complex))

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return unitarity_defect(self) <= tol


def _mul_factor(f, g):
    if f is None:
        return g
    if g is None:
        return f
    return f @ g


def _apply_blocks(layout: ModeLayout, blocks: Blocks, x: np.ndarray) -> np.ndarray:
    extra = x.shape[1:]
    t = x.reshape((layout.info_dim,) + layout.anc_dims + extra)
    out = np.empty_like(t)
    for s, key in enumerate(np.ndindex(*layout.info_dims)):
        y = t[s]
        for j, f in enumerate(blocks[key]):
            if f is not None:
                y = np.moveaxis(np.tensordot(f, y, axes=([1], [j])), 0, j)
        out[s] = y
    return out.reshape(x.shape)


def unitarity_defect(op: Operator) -> float:
    """Max-entry norm of ``U^dagger U - I``, evaluated block-wise when possible."""
    if op.blocks is not None:
        worst = 0.0
        cache: dict[int, float] = {}
        for factors in op.blocks.values():
            for f in factors:
                if f is None or id(f) in cache:
                    continue
                cache[id(f)] = float(np.abs(f.conj().T @ f - np.eye(f.shape[0])).max())
                worst = max(worst, cache[id(f)])
        return worst
    m = op.matrix
    if sp.issparse(m):
        d = sp.csr_matrix(m.conj().T @ m - sp.identity(m.shape[0], format="csr"))
        return float(abs(d).max()) if d.nnz else 0.0
    u = m if isinstance(m, np.ndarray) else op.to_dense()
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def identity(layout: ModeLayout) -> Operator:
    return Operator(layout, sp.identity(layout.total_dim, dtype=complex, format="csr"), unitary=True)


def embed(layout: ModeLayout, locals_: Mapping[int, np.ndarray]) -> Operator:
    """Kronecker product of single-mode matrices (identity on unlisted modes)."""
    for mode, m in locals_.items():
        layout.check_mode(mode)
        d = layout.dims[mode]
        if np.shape(m) != (d, d):
            raise LayoutError(f"local matrix for mode {mode} must be {d}x{d}")
    mats = [
        sp.csr_matrix(locals_[mode]) if mode in locals_ else sp.identity(d, dtype=complex, format="csr")
        for mode, d in enumerate(layout.dims)
    ]
    return Operator(layout, reduce(lambda x, y: sp.kron(x, y, format="csr"), mats))


def single_mode_annihilation(dim: int) -> np.ndarray:
    """Truncated ``a`` with ``<n-1|a|n> = sqrt(n)``."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def ladder_op(layout: ModeLayout, mode: int, kind: str = ANNIHILATE) -> Operator:
    layout.check_mode(mode)
    a = single_mode_annihilation(layout.dims[mode])
    if kind == ANNIHILATE:
        return embed(layout, {mode: a})
    if kind == CREATE:
        return embed(layout, {mode: a.conj().T})
    raise ValueError(f"kind must be {ANNIHILATE!r} or {CREATE!r}, got {kind!r}")


def commutator_defect(dim: int) -> np.ndarray:
    """``[a, a^dagger] - I`` on a single truncated mode.

    Zero everywhere except the bottom-right entry, which equals ``-dim``
    (the commutator itself is ``1 - dim`` on the top level).
    """
    a = single_mode_annihilation(dim)
    return a @ a.conj().T - a.conj().T @ a - np.eye(dim)


def apply(op: Operator, state: StateVector) -> StateVector:
    """Matrix-vector product; the result is not renormalised."""
    if op.layout != state.layout:
        raise LayoutError("operator and state live on different layouts")
    return StateVector(state.layout, op.apply_array(state.amps))


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>`` (conjugate-linear in the first argument)."""
    if a.layout != b.layout:
        raise LayoutError("states live on different layouts")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    na, nb = a.norm, b.norm
    if na <= NORM_EPS or nb <= NORM_EPS:
        raise ZeroNormError("fidelity of a zero-norm state is undefined")
    f = abs(inner(a, b)) ** 2 / (na**2 * nb**2)
    return float(min(f, 1.0))


def normalize(state: StateVector, eps: float = NORM_EPS) -> tuple[StateVector, float]:
    """Return ``(state / norm, norm)``.

    Raises:
        ZeroNormError: the norm is at or below ``eps`` (an impossible event).
    """
    n = state.norm
    if n <= eps:
        raise ZeroNormError(f"state norm {n:.3e} is below {eps:.0e}")
    return state / n, n


def mode_marginal(state: StateVector, mode: int) -> np.ndarray:
    """Photon-number distribution of one mode (other modes traced out)."""
    state.layout.check_mode(mode)
    p = np.abs(state.tensor()) ** 2
    axes = tuple(ax for ax in range(state.layout.n_modes) if ax != mode)
    return p.sum(axis=axes) / p.sum()


def tail_mass(state: StateVector, mode: int, cutoff: int) -> float:
    """Probability of finding more than ``cutoff`` photons in ``mode``."""
    return float(mode_marginal(state, mode)[cutoff + 1 :].sum())


def expm_hermitian(h: np.ndarray, coeff: float = 1.0) -> np.ndarray:
    """``exp(i * coeff * h)`` for Hermitian ``h`` via eigendecomposition.

    The result is unitary to machine precision regardless of the spectrum.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("generator must be square")
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.conj().T).max() > 1e-12 * scale:
        raise ValueError("generator is not Hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * coeff * w)) @ v.conj().T


def exp_operator(generator: Operator, coeff: float = 1.0) -> Operator:
    """Dense ``exp(i * coeff * H)`` of a Hermitian operator on a small layout."""
    return Operator(generator.layout, expm_hermitian(generator.to_dense(), coeff), unitary=True)
