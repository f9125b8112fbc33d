"""Entropic functionals: von Neumann, relative, conditional, mutual, Shannon.

All quantities are returned in nats.  Relative entropy returns ``math.inf``
when the support condition fails; every other functional is finite.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .operators import (
    CompositionError,
    Operator,
    SUPPORT_CUTOFF,
    partial_trace,
)

SUPPORT_VIOLATION_ATOL = 1e-10   # residual trace outside supp(sigma) that counts as violation


def _entropy_of_spectrum(w: np.ndarray, cutoff: float = SUPPORT_CUTOFF) -> float:
    w = w[w > cutoff]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho: Operator) -> float:
    """-Tr[rho ln rho], with eigenvalues below the support cutoff contributing zero."""
    w = np.linalg.eigvalsh(rho.mat)
    return _entropy_of_spectrum(w)


def shannon_entropy(p: Iterable[float]) -> float:
    """-sum p ln p with the convention 0 ln 0 = 0."""
    p = np.asarray(list(p), dtype=np.float64)
    return _entropy_of_spectrum(p)


def relative_entropy(rho: Operator, sigma: Operator) -> float:
    """Umegaki relative entropy Tr[rho (ln rho - ln sigma)].

    Support inclusion is decided by projecting rho onto the orthogonal
    complement of supp(sigma): if the residual trace exceeds
    ``SUPPORT_VIOLATION_ATOL`` the result is +inf.
    """
    if rho.factors != sigma.factors:
        raise CompositionError(f"states on different spaces: {rho.names} vs {sigma.names}")
    ws, vs = np.linalg.eigh(sigma.mat)
    # populations of rho in sigma's eigenbasis
    pops = np.einsum("ij,jk,ki->i", vs.conj().T, rho.mat, vs).real
    outside = ws <= SUPPORT_CUTOFF
    if float(np.sum(pops[outside])) > SUPPORT_VIOLATION_ATOL:
        return math.inf
    inside = ~outside
    tr_rho_lnsigma = float(np.sum(pops[inside] * np.log(ws[inside])))
    return -von_neumann_entropy(rho) - tr_rho_lnsigma


def _check_partition(rho: Operator, *parts: Iterable[str]):
    seen: list[str] = []
    for part in parts:
        for name in part:
            seen.append(name)
    if len(set(seen)) != len(seen):
        raise CompositionError(f"partition blocks overlap: {parts}")
    if set(seen) != set(rho.names):
        raise CompositionError(f"partition {parts} does not cover factors {rho.names}")


def mutual_information(rho: Operator, part_a: Iterable[str], part_b: Iterable[str]) -> float:
    """I(A:B) = S(A) + S(B) - S(AB)."""
    part_a, part_b = list(part_a), list(part_b)
    _check_partition(rho, part_a, part_b)
    s_a = von_neumann_entropy(partial_trace(rho, part_a))
    s_b = von_neumann_entropy(partial_trace(rho, part_b))
    return s_a + s_b - von_neumann_entropy(rho)


def conditional_entropy(rho: Operator, part_a: Iterable[str], part_b: Iterable[str]) -> float:
    """S(A|B) = S(AB) - S(B); may be negative."""
    part_a, part_b = list(part_a), list(part_b)
    _check_partition(rho, part_a, part_b)
    return von_neumann_entropy(rho) - von_neumann_entropy(partial_trace(rho, part_b))


def conditional_mutual_information(rho: Operator, part_a: Iterable[str],
                                   part_c: Iterable[str], part_b: Iterable[str]) -> float:
    """I(A:C|B) = S(AB) + S(CB) - S(B) - S(ACB).

    Computed from four entropies so it is valid for arbitrary (also
    non-classical) conditioning systems B.
    """
    part_a, part_c, part_b = list(part_a), list(part_c), list(part_b)
    _check_partition(rho, part_a, part_c, part_b)
    s_ab = von_neumann_entropy(partial_trace(rho, part_a + part_b))
    s_cb = von_neumann_entropy(partial_trace(rho, part_c + part_b))
    s_b = von_neumann_entropy(partial_trace(rho, part_b))
    return s_ab + s_cb - s_b - von_neumann_entropy(rho)
