"""CP operations, instruments, POVMs, measurement schemes, random generators.

Instruments are stored in the Schroedinger picture as explicit Kraus lists;
the Heisenberg dual is computed on demand and never stored.  Random
generators take explicit seeds so that every sample is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .operators import (
    CompositionError,
    DomainError,
    Operator,
    System,
    assert_density,
    assert_hermitian,
    embed,
    hermitian_eig,
    matrix_sqrt,
    partial_trace,
    tensor,
)

CHANNEL_ATOL = 1e-10        # closure residuals (POVM sum, trace preservation, unitality)
PROBABILITY_FLOOR = 1e-12   # branches below this weight carry an undefined posterior
KRAUS_DROP_TOL = 1e-14      # Kraus operators with Frobenius norm below this are dropped
RANK_ATOL = 1e-10           # numerical rank decisions (Choi, Gram, effects)


def _common_factors(ops: Sequence[Operator]) -> tuple[System, ...]:
    factors = ops[0].factors
    for op in ops[1:]:
        if op.factors != factors:
            raise CompositionError("Kraus operators must share one factor set")
    return factors


class KrausOperation:
    """A completely positive, trace non-increasing map given by Kraus operators."""

    __slots__ = ("kraus",)

    def __init__(self, kraus: Sequence[Operator], *, validate: bool = True):
        kraus = tuple(kraus)
        if not kraus:
            raise DomainError("a Kraus operation needs at least one operator")
        _common_factors(kraus)
        if validate:
            w = np.linalg.eigvalsh(self.__class__._effect_mat(kraus))
            if w[-1] > 1.0 + CHANNEL_ATOL:
                raise DomainError(f"operation increases trace: max eig {w[-1]:.12f}")
        object.__setattr__(self, "kraus", kraus)

    def __setattr__(self, name, value):
        raise AttributeError("KrausOperation is immutable")

    @staticmethod
    def _effect_mat(kraus: Sequence[Operator]) -> np.ndarray:
        return sum(k.mat.conj().T @ k.mat for k in kraus)

    @property
    def factors(self) -> tuple[System, ...]:
        return self.kraus[0].factors

    def effect(self) -> Operator:
        """Heisenberg dual applied to the identity: sum K^dag K."""
        return Operator(self.factors, self._effect_mat(self.kraus), copy=False)

    def choi(self) -> np.ndarray:
        """Choi matrix sum_a vec(K_a) vec(K_a)^dag with row-major vectorization."""
        d = self.kraus[0].dim
        vecs = np.stack([k.mat.reshape(d * d) for k in self.kraus])
        return vecs.T @ vecs.conj()

    def kraus_rank(self, atol: float = RANK_ATOL) -> int:
        """Numerical rank of the Choi block (number of independent Kraus operators)."""
        gram = np.array(
            [[np.trace(a.mat.conj().T @ b.mat) for b in self.kraus] for a in self.kraus]
        )
        w = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
        scale = max(float(w[-1]), 0.0)
        if scale <= 0.0:
            return 0
        return int(np.sum(w > atol * scale))


def apply_operation(op: KrausOperation, rho: Operator) -> tuple[float, Operator | None]:
    """Apply a CP operation to a state; returns (weight, normalized posterior).

    Kraus operators acting on a subset of the state's factors are embedded
    automatically.  Branches with weight below ``PROBABILITY_FLOOR`` return a
    ``None`` posterior: the state on such a branch is undefined and callers
    must skip it.
    """
    kraus = op.kraus
    if kraus[0].factors != rho.factors:
        kraus = [embed(k, rho.factors) for k in kraus]
    out = np.zeros_like(rho.mat)
    for k in kraus:
        out += k.mat @ rho.mat @ k.mat.conj().T
    weight = float(np.trace(out).real)
    if weight <= PROBABILITY_FLOOR:
        return max(weight, 0.0), None
    post = (out + out.conj().T) / (2 * weight)
    return weight, Operator(rho.factors, post, copy=False)


class Instrument:
    """Outcome-labeled family of CP operations whose sum is trace preserving."""

    __slots__ = ("outcomes", "operations")

    def __init__(self, operations: Mapping[int, KrausOperation], *, validate: bool = True):
        outcomes = tuple(operations.keys())
        if not outcomes:
            raise DomainError("an instrument needs at least one outcome")
        ops = dict(operations)
        _common_factors([k for o in ops.values() for k in o.kraus])
        if validate:
            total = sum(KrausOperation._effect_mat(ops[o].kraus) for o in outcomes)
            resid = np.max(np.abs(total - np.eye(total.shape[0])))
            if resid > CHANNEL_ATOL:
                raise DomainError(f"instrument is not trace preserving (residual {resid:.3e})")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "operations", ops)

    def __setattr__(self, name, value):
        raise AttributeError("Instrument is immutable")

    @property
    def factors(self) -> tuple[System, ...]:
        return next(iter(self.operations.values())).factors

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def total_channel(self) -> KrausOperation:
        return KrausOperation(
            [k for o in self.outcomes for k in self.operations[o].kraus], validate=False
        )


class POVM:
    """Positive effects summing to the identity."""

    __slots__ = ("outcomes", "effects")

    def __init__(self, effects: Mapping[int, Operator], *, validate: bool = True):
        outcomes = tuple(effects.keys())
        effs = dict(effects)
        _common_factors(list(effs.values()))
        if validate:
            total = sum(e.mat for e in effs.values())
            resid = np.max(np.abs(total - np.eye(total.shape[0])))
            if resid > CHANNEL_ATOL:
                raise DomainError(f"effects do not sum to identity (residual {resid:.3e})")
            for o in outcomes:
                assert_hermitian(effs[o], 1e-10)
                w = np.linalg.eigvalsh(effs[o].mat)
                if w[0] < -CHANNEL_ATOL or w[-1] > 1.0 + CHANNEL_ATOL:
                    raise DomainError(f"effect {o} spectrum outside [0, 1]: [{w[0]}, {w[-1]}]")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "effects", effs)

    def __setattr__(self, name, value):
        raise AttributeError("POVM is immutable")

    @property
    def factors(self) -> tuple[System, ...]:
        return next(iter(self.effects.values())).factors


@dataclass(frozen=True)
class MeasurementScheme:
    """Premeasurement on target+memory followed by pointer objectification.

    ``premeasurement`` is a unitary on (target, memory); ``pointer`` is an
    instrument acting on the memory factor alone.
    """

    rho0_memory: Operator
    premeasurement: Operator
    pointer: Instrument

    def __post_init__(self):
        if len(self.premeasurement.factors) != 2:
            raise CompositionError("premeasurement must act on exactly (target, memory)")
        target, memory = self.premeasurement.factors
        if self.pointer.factors != (memory,):
            raise CompositionError("pointer instrument must act on the memory factor")
        if self.rho0_memory.factors != (memory,):
            raise CompositionError("memory state must live on the memory factor")
        assert_density(self.rho0_memory)
        u = self.premeasurement.mat
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > CHANNEL_ATOL:
            raise DomainError("premeasurement is not unitary")

    @property
    def target(self) -> System:
        return self.premeasurement.factors[0]

    @property
    def memory(self) -> System:
        return self.premeasurement.factors[1]


# -- constructors ---------------------------------------------------------------


def povm_of_instrument(ins: Instrument) -> POVM:
    """The unique POVM measured by an instrument: effect_k = sum_j K_kj^dag K_kj."""
    return POVM({o: ins.operations[o].effect() for o in ins.outcomes})


def luders_instrument(m: POVM) -> Instrument:
    """Square-root instrument of a POVM: one Kraus sqrt(M_k) per outcome."""
    return Instrument(
        {o: KrausOperation([matrix_sqrt(m.effects[o])], validate=False) for o in m.outcomes}
    )


def nuclear_instrument(m: POVM, prepared: Mapping[int, Operator]) -> Instrument:
    """Measure-and-prepare instrument: rho -> Tr[M_k rho] * prepared_k.

    Kraus operators for outcome k are sqrt(q_j) |phi_j><e_i| sqrt(M_k), where
    prepared_k = sum_j q_j |phi_j><phi_j| and {|e_i>} is the computational
    basis; their action reproduces the measure-and-prepare map exactly.
    """
    factors = m.factors
    dim = next(iter(m.effects.values())).dim
    ops = {}
    for o in m.outcomes:
        if o not in prepared:
            raise DomainError(f"no prepared state for outcome {o}")
        state = prepared[o]
        if state.factors != factors:
            raise CompositionError("prepared states must live on the measured system")
        assert_density(state)
        root = matrix_sqrt(m.effects[o]).mat
        q, phi = np.linalg.eigh(state.mat)
        kraus = []
        for j in range(dim):
            if q[j] <= PROBABILITY_FLOOR:
                continue
            col = np.sqrt(q[j]) * phi[:, j:j + 1]
            for i in range(dim):
                k = col @ root[i:i + 1, :]
                if np.linalg.norm(k) > KRAUS_DROP_TOL:
                    kraus.append(Operator(factors, k, copy=False))
        if not kraus:
            kraus = [Operator.zero(factors)]
        ops[o] = KrausOperation(kraus, validate=False)
    return Instrument(ops)


def unitary_channel(u: Operator) -> KrausOperation:
    return KrausOperation([u], validate=False)


# -- predicates -------------------------------------------------------------------


class BistochasticCheck(NamedTuple):
    ok: bool
    unitality_residual: float
    trace_residual: float


def is_bistochastic(ins: Instrument) -> BistochasticCheck:
    """True iff the total channel preserves both the trace and the identity."""
    dim = next(iter(ins.operations.values())).kraus[0].dim
    eye = np.eye(dim)
    tp = sum(
        k.mat.conj().T @ k.mat for o in ins.outcomes for k in ins.operations[o].kraus
    )
    un = sum(
        k.mat @ k.mat.conj().T for o in ins.outcomes for k in ins.operations[o].kraus
    )
    tp_resid = float(np.max(np.abs(tp - eye)))
    un_resid = float(np.max(np.abs(un - eye)))
    return BistochasticCheck(
        tp_resid <= CHANNEL_ATOL and un_resid <= CHANNEL_ATOL, un_resid, tp_resid
    )


def is_efficient(ins: Instrument, atol: float = RANK_ATOL) -> bool:
    """True iff every operation has Kraus rank one."""
    return all(ins.operations[o].kraus_rank(atol) <= 1 for o in ins.outcomes)


def povm_is_rank_one(m: POVM, atol: float = RANK_ATOL) -> bool:
    """True iff every nonzero effect is proportional to a rank-1 projection."""
    for o in m.outcomes:
        w = np.linalg.eigvalsh(m.effects[o].mat)
        scale = float(w[-1])
        if scale <= atol:
            continue
        if int(np.sum(w > atol * scale)) > 1:
            return False
    return True


def is_quasi_complete_sampled(ins: Instrument, n_samples: int = 200, seed: int = 0,
                              purity_tol: float = 1e-9) -> bool:
    """Sampled check that every pure input yields pure posteriors.

    This is a Monte-Carlo predicate, not a decision procedure: it can refute
    quasi-completeness but only accumulate evidence in favour.
    """
    rng = _rng(seed)
    factors = ins.factors
    dim = ins.factors[0].dim if len(factors) == 1 else int(np.prod([f.dim for f in factors]))
    for _ in range(n_samples):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        rho = Operator(factors, np.outer(v, v.conj()), copy=False)
        for o in ins.outcomes:
            p, post = apply_operation(ins.operations[o], rho)
            if post is None:
                continue
            purity = float(np.trace(post.mat @ post.mat).real)
            if purity < 1.0 - purity_tol:
                return False
    return True


# -- the induced instrument on the target system ----------------------------------


def induced_system_instrument(scheme: MeasurementScheme) -> Instrument:
    """Instrument realized on the target by a measurement scheme.

    The Kraus collection for outcome k is built from the eigendecomposition of
    the initial memory state and the pointer's Kraus operators:

        L = sqrt(q_i) (1 (x) <mu|) (1 (x) J_km) U (1 (x) |phi_i>),

    one operator per memory eigenvector phi_i, pointer Kraus J_km, and memory
    basis vector mu.
    """
    target, memory = scheme.premeasurement.factors
    da, dm = target.dim, memory.dim
    q, phi = np.linalg.eigh(scheme.rho0_memory.mat)
    u = scheme.premeasurement.mat
    ops = {}
    for o in scheme.pointer.outcomes:
        kraus = []
        for j_op in scheme.pointer.operations[o].kraus:
            ju = np.kron(np.eye(da), j_op.mat) @ u
            for i in range(dm):
                if q[i] <= PROBABILITY_FLOOR:
                    continue
                lift = np.kron(np.eye(da), phi[:, i:i + 1])  # |xi> -> |xi>(x)|phi_i>
                block = (ju @ lift).reshape(da, dm, da) * np.sqrt(q[i])
                for mu in range(dm):
                    k = block[:, mu, :]
                    if np.linalg.norm(k) > KRAUS_DROP_TOL:
                        kraus.append(Operator((target,), k, copy=False))
        if not kraus:
            kraus = [Operator.zero((target,))]
        ops[o] = KrausOperation(kraus, validate=False)
    return Instrument(ops)


# -- random generators --------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng, rows, cols) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar-distributed unitary: QR of a Ginibre matrix with phase fixing."""
    rng = _rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rank: int | None = None, seed=0) -> np.ndarray:
    """Normalized G G^dag with G a dim x rank Ginibre matrix."""
    rng = _rng(seed)
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise DomainError(f"rank must be in [1, {dim}], got {rank}")
    g = _ginibre(rng, dim, rank)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_instrument(system: System, n_outcomes: int, seed,
                      kraus_per_outcome: int = 1) -> Instrument:
    """Random instrument from Stinespring sampling.

    A Haar-random isometry into system (x) environment is partitioned over an
    environment basis grouped into ``n_outcomes`` blocks of size
    ``kraus_per_outcome``.
    """
    rng = _rng(seed)
    dim = system.dim
    env = n_outcomes * kraus_per_outcome
    big = random_unitary(dim * env, rng)
    iso = big[:, :dim].reshape(dim, env, dim)
    ops = {}
    for o in range(n_outcomes):
        kraus = [
            Operator((system,), iso[:, o * kraus_per_outcome + c, :])
            for c in range(kraus_per_outcome)
        ]
        ops[o] = KrausOperation(kraus, validate=False)
    return Instrument(ops)


def random_povm(system: System, n_outcomes: int, seed) -> POVM:
    return povm_of_instrument(random_instrument(system, n_outcomes, seed))
