"""Dense complex operator algebra over labeled tensor factors.

Matrices are stored dense in numpy's default row-major (C) order.  The basis
of a composite space is the lexicographic product of the factor bases with
the *first* factor most significant, i.e. the usual Kronecker-product
convention.  Target scale is a total dimension of a few hundred, so O(d^3)
spectral routines are used freely.

The Hermitian eigensolver is ``numpy.linalg.eigh`` (LAPACK ``heevd``:
tridiagonal reduction followed by divide and conquer); it comfortably meets
the reconstruction tolerance below on the matrix sizes this package handles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

# Tolerances used across the package.  Entropy/support decisions use
# SUPPORT_CUTOFF, which sits well above double-precision eigenvalue noise at
# these dimensions.
HERMITICITY_RTOL = 1e-12        # relative to the largest entry magnitude
RECONSTRUCTION_RTOL = 1e-10     # eigendecomposition round-trip bound
SUPPORT_CUTOFF = 1e-12          # eigenvalues below this count as zero
DENSITY_NEG_TOL = 1e-10         # largest tolerated negative eigenvalue
TRACE_ATOL = 1e-10


class CompositionError(ValueError):
    """Tensor factors combined inconsistently (duplicate or unknown labels)."""


class DomainError(ValueError):
    """An operator violates the preconditions of the requested operation."""


@dataclass(frozen=True)
class System:
    """A labeled tensor factor: subsystem name plus Hilbert-space dimension."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"system {self.name!r} needs dim >= 1, got {self.dim}")


def _as_systems(factors) -> tuple[System, ...]:
    factors = tuple(factors)
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise CompositionError(f"duplicate system labels in {names}")
    return factors


class Operator:
    """A linear operator on the tensor product of an ordered list of systems."""

    __slots__ = ("factors", "mat")

    def __init__(self, factors: Iterable[System], mat: np.ndarray, *, copy: bool = True):
        factors = _as_systems(factors)
        dim = int(np.prod([f.dim for f in factors], dtype=np.int64)) if factors else 1
        mat = np.array(mat, dtype=np.complex128, copy=copy)
        if mat.shape != (dim, dim):
            raise CompositionError(
                f"matrix shape {mat.shape} does not match factor dims "
                f"{[f.dim for f in factors]} (total {dim})"
            )
        if not np.all(np.isfinite(mat.view(np.float64))):
            raise DomainError("operator entries must be finite")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "mat", mat)

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def identity(cls, factors: Iterable[System]) -> "Operator":
        factors = tuple(factors)
        dim = int(np.prod([f.dim for f in factors], dtype=np.int64)) if factors else 1
        return cls(factors, np.eye(dim, dtype=np.complex128), copy=False)

    @classmethod
    def zero(cls, factors: Iterable[System]) -> "Operator":
        factors = tuple(factors)
        dim = int(np.prod([f.dim for f in factors], dtype=np.int64)) if factors else 1
        return cls(factors, np.zeros((dim, dim), dtype=np.complex128), copy=False)

    # -- basic queries ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def norm_max(self) -> float:
        return float(np.max(np.abs(self.mat))) if self.mat.size else 0.0

    def dag(self) -> "Operator":
        return Operator(self.factors, self.mat.conj().T, copy=False)

    def hermitize(self) -> "Operator":
        return Operator(self.factors, (self.mat + self.mat.conj().T) / 2, copy=False)

    def is_hermitian(self, rtol: float = HERMITICITY_RTOL) -> bool:
        resid = float(np.max(np.abs(self.mat - self.mat.conj().T))) if self.mat.size else 0.0
        return resid <= rtol * max(self.norm_max(), 1e-300)

    def __repr__(self):
        labels = ",".join(f"{f.name}:{f.dim}" for f in self.factors)
        return f"Operator[{labels}]"

    # -- arithmetic ------------------------------------------------------------

    def _require_same_space(self, other: "Operator"):
        if self.factors != other.factors:
            raise CompositionError(
                f"operators live on different spaces: {self.names} vs {other.names}"
            )

    def __add__(self, other: "Operator") -> "Operator":
        self._require_same_space(other)
        return Operator(self.factors, self.mat + other.mat, copy=False)

    def __sub__(self, other: "Operator") -> "Operator":
        self._require_same_space(other)
        return Operator(self.factors, self.mat - other.mat, copy=False)

    def __neg__(self) -> "Operator":
        return Operator(self.factors, -self.mat, copy=False)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.factors, self.mat * scalar, copy=False)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._require_same_space(other)
        return Operator(self.factors, self.mat @ other.mat, copy=False)

    # -- structural operations ---------------------------------------------------

    def tensor(self, other: "Operator") -> "Operator":
        return tensor(self, other)

    def ptrace(self, keep: Iterable[str | System]) -> "Operator":
        return partial_trace(self, keep)

    def permuted(self, order: Sequence[str]) -> "Operator":
        return permute(self, order)

    def embedded(self, target: Iterable[System]) -> "Operator":
        return embed(self, target)

    def sandwich(self, rho: "Operator") -> "Operator":
        """K rho K^dagger with K = self."""
        self._require_same_space(rho)
        return Operator(self.factors, self.mat @ rho.mat @ self.mat.conj().T, copy=False)


def _names(keep) -> list[str]:
    return [f.name if isinstance(f, System) else str(f) for f in keep]


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product; factor lists are concatenated (first factor most significant)."""
    factors = a.factors + b.factors
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise CompositionError(f"duplicate system labels in tensor product: {names}")
    return Operator(factors, np.kron(a.mat, b.mat), copy=False)


def tensor_all(ops: Iterable[Operator]) -> Operator:
    ops = list(ops)
    if not ops:
        return Operator((), np.ones((1, 1), dtype=np.complex128), copy=False)
    out = ops[0]
    for op in ops[1:]:
        out = tensor(out, op)
    return out


def partial_trace(x: Operator, keep: Iterable[str | System]) -> Operator:
    """Trace out every factor not named in ``keep``; kept factors stay in x's order."""
    keep_names = set(_names(keep))
    have = set(x.names)
    unknown = keep_names - have
    if unknown:
        raise CompositionError(f"unknown system labels {sorted(unknown)}; state has {x.names}")
    keep_pos = [i for i, f in enumerate(x.factors) if f.name in keep_names]
    drop_pos = [i for i, f in enumerate(x.factors) if f.name not in keep_names]
    dims = list(x.dims)
    n = len(dims)
    t = x.mat.reshape(dims + dims)
    for removed, pos in enumerate(drop_pos):
        p = pos - removed
        legs = n - removed
        t = np.trace(t, axis1=p, axis2=p + legs)
    new_factors = tuple(x.factors[i] for i in keep_pos)
    new_dim = int(np.prod([f.dim for f in new_factors], dtype=np.int64)) if new_factors else 1
    return Operator(new_factors, t.reshape(new_dim, new_dim), copy=False)


def permute(x: Operator, order: Sequence[str]) -> Operator:
    """Reorder tensor factors to the given name order."""
    order = list(order)
    if sorted(order) != sorted(x.names):
        raise CompositionError(f"permutation {order} does not match factors {x.names}")
    idx = [x.names.index(name) for name in order]
    if idx == list(range(len(idx))):
        return x
    dims = list(x.dims)
    n = len(dims)
    t = x.mat.reshape(dims + dims)
    perm = idx + [i + n for i in idx]
    t = t.transpose(perm)
    new_factors = tuple(x.factors[i] for i in idx)
    return Operator(new_factors, np.ascontiguousarray(t.reshape(x.dim, x.dim)), copy=False)


def embed(op: Operator, target: Iterable[System]) -> Operator:
    """Extend ``op`` by identity factors so that it acts on ``target`` (order included)."""
    target = tuple(target)
    target_names = [f.name for f in target]
    for f in op.factors:
        if f not in target:
            raise CompositionError(f"factor {f} not present in target {target_names}")
    missing = tuple(f for f in target if f.name not in op.names)
    big = tensor(op, Operator.identity(missing)) if missing else op
    return permute(big, target_names)


def expectation(rho: Operator, obs: Operator) -> float:
    """Tr[rho * obs] for Hermitian obs; the (tiny) imaginary part is discarded."""
    if rho.factors != obs.factors:
        raise CompositionError(f"state on {rho.names} but observable on {obs.names}")
    return float(np.trace(rho.mat @ obs.mat).real)


# -- spectral machinery -------------------------------------------------------


def assert_hermitian(x: Operator, rtol: float = HERMITICITY_RTOL):
    if not x.is_hermitian(rtol):
        resid = float(np.max(np.abs(x.mat - x.mat.conj().T)))
        raise DomainError(f"operator is not Hermitian (residual {resid:.3e})")


def hermitian_eig(h: Operator) -> tuple[np.ndarray, Operator]:
    """Eigenvalues (ascending) and the unitary of eigenvectors of a Hermitian operator."""
    assert_hermitian(h)
    w, v = np.linalg.eigh(h.mat)
    return w, Operator(h.factors, v, copy=False)


def spectral_fn(h: Operator, f: Callable[[np.ndarray], np.ndarray]) -> Operator:
    """Apply a real scalar function eigenvalue-wise in the eigenbasis of ``h``."""
    w, v = hermitian_eig(h)
    fw = np.asarray(f(w), dtype=np.float64)
    mat = (v.mat * fw) @ v.mat.conj().T
    return Operator(h.factors, (mat + mat.conj().T) / 2, copy=False)


def matrix_exp(h: Operator) -> Operator:
    return spectral_fn(h, np.exp)


def matrix_sqrt(h: Operator) -> Operator:
    return spectral_fn(h, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def matrix_log_on_support(h: Operator, cutoff: float = SUPPORT_CUTOFF) -> Operator:
    """log(h) on the support of h; eigenvalues below ``cutoff`` contribute zero."""

    def f(w):
        out = np.zeros_like(w)
        on = w > cutoff
        out[on] = np.log(w[on])
        return out

    return spectral_fn(h, f)


# -- density-operator validation ----------------------------------------------


def is_density(rho: Operator, neg_tol: float = DENSITY_NEG_TOL,
               trace_tol: float = TRACE_ATOL) -> bool:
    if not rho.is_hermitian():
        return False
    if abs(rho.trace() - 1.0) > trace_tol:
        return False
    w = np.linalg.eigvalsh(rho.mat)
    return bool(w[0] >= -neg_tol)


def assert_density(rho: Operator, neg_tol: float = DENSITY_NEG_TOL,
                   trace_tol: float = TRACE_ATOL):
    assert_hermitian(rho)
    tr = rho.trace()
    if abs(tr - 1.0) > trace_tol:
        raise DomainError(f"state trace {tr} differs from 1 beyond {trace_tol}")
    w = np.linalg.eigvalsh(rho.mat)
    if w[0] < -neg_tol:
        raise DomainError(f"state has negative eigenvalue {w[0]:.3e}")


def clip_to_density(rho: Operator, neg_tol: float = DENSITY_NEG_TOL) -> tuple[Operator, bool]:
    """Clip tiny negative eigenvalues to zero and renormalize.

    Never silent: returns ``(state, clipped)`` where ``clipped`` reports whether
    anything was altered.  Negative eigenvalues beyond ``neg_tol`` are a domain
    error, not noise, and are refused.
    """
    assert_hermitian(rho)
    w, v = np.linalg.eigh(rho.mat)
    if w[0] < -neg_tol:
        raise DomainError(f"eigenvalue {w[0]:.3e} too negative to clip")
    if w[0] >= 0 and abs(rho.trace() - 1.0) <= 1e-15:
        return rho, False
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    mat = (v * w) @ v.conj().T
    return Operator(rho.factors, (mat + mat.conj().T) / 2, copy=False), True


# -- small constructors used throughout ----------------------------------------


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def basis_projector(dim: int, index: int) -> np.ndarray:
    return projector(ket(dim, index))
