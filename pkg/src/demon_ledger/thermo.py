"""Thermodynamic systems: Gibbs states, internal energy, free energies.

Natural units k_B = 1 throughout; the inverse temperature beta is carried
explicitly by every quantity that needs it.  Energies are in whatever unit
the Hamiltonians use; entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .operators import (
    CompositionError,
    DomainError,
    Operator,
    assert_density,
    assert_hermitian,
    expectation,
    hermitian_eig,
)
from .qinfo import von_neumann_entropy

# Bath Hamiltonians engineered from a target state cap the energy of the
# target's kernel at ENERGY_CAP_NATS / beta; the matching Gibbs state then
# carries weight ~exp(-ENERGY_CAP_NATS) outside the target support, far below
# every tolerance in this package.
ENERGY_CAP_NATS = 30.0


@dataclass(frozen=True)
class ThermoSystem:
    """A state, its Hamiltonian, and the bath inverse temperature."""

    rho: Operator
    hamiltonian: Operator
    beta: float

    def __post_init__(self):
        if self.rho.factors != self.hamiltonian.factors:
            raise CompositionError(
                f"state on {self.rho.names} but Hamiltonian on {self.hamiltonian.names}"
            )
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")


def gibbs_state(hamiltonian: Operator, beta: float) -> Operator:
    """exp(-beta H) / Z, computed spectrally with the ground energy shifted out."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    w, v = hermitian_eig(hamiltonian)
    p = np.exp(-beta * (w - w[0]))
    p /= p.sum()
    mat = (v.mat * p) @ v.mat.conj().T
    return Operator(hamiltonian.factors, (mat + mat.conj().T) / 2, copy=False)


def partition_function_log(hamiltonian: Operator, beta: float) -> float:
    """ln Z = ln Tr exp(-beta H), evaluated stably."""
    w = np.linalg.eigvalsh(hamiltonian.mat)
    shift = -beta * w[0]
    return float(shift + np.log(np.sum(np.exp(-beta * (w - w[0])))))


def internal_energy(system: ThermoSystem) -> float:
    """Tr[rho H]."""
    return expectation(system.rho, system.hamiltonian)


def noneq_free_energy(system: ThermoSystem) -> float:
    """F(rho; H) = Tr[rho H] - S(rho) / beta."""
    return internal_energy(system) - von_neumann_entropy(system.rho) / system.beta


def eq_free_energy(hamiltonian: Operator, beta: float) -> float:
    """Equilibrium (Helmholtz) free energy -ln(Z) / beta."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return -partition_function_log(hamiltonian, beta) / beta


class Quantity(Enum):
    ENERGY = "E"
    FREE_ENERGY = "F"
    ENTROPY = "S"


def delta(which: Quantity | str, start: ThermoSystem, end: ThermoSystem) -> float:
    """Increase of E, F, or S between two thermodynamic snapshots."""
    which = Quantity(which) if not isinstance(which, Quantity) else which
    if which is Quantity.ENERGY:
        return internal_energy(end) - internal_energy(start)
    if which is Quantity.FREE_ENERGY:
        if end.beta != start.beta:
            raise DomainError("free-energy differences need a common beta")
        return noneq_free_energy(end) - noneq_free_energy(start)
    return von_neumann_entropy(end.rho) - von_neumann_entropy(start.rho)


def hamiltonian_for_state(state: Operator, beta: float,
                          cap_nats: float = ENERGY_CAP_NATS) -> Operator:
    """A Hamiltonian whose Gibbs state at ``beta`` reproduces ``state``.

    H = -ln(state) / beta on the support; kernel directions get the finite
    penalty ``cap_nats / beta`` instead of an infinite energy, so the match is
    exact up to weight ~exp(-cap_nats) outside the support.
    """
    assert_density(state)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    w, v = np.linalg.eigh(state.mat)
    floor = np.exp(-cap_nats)
    energies = -np.log(np.clip(w, floor, None)) / beta
    mat = (v * energies) @ v.conj().T
    return Operator(state.factors, (mat + mat.conj().T) / 2, copy=False)
