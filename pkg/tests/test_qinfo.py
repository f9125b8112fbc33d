import math

import numpy as np
import pytest

from demon_ledger.operators import Operator, System, basis_projector, partial_trace, tensor
from demon_ledger.qinfo import (
    conditional_entropy,
    conditional_mutual_information,
    mutual_information,
    relative_entropy,
    shannon_entropy,
    von_neumann_entropy,
)

LN2 = math.log(2.0)
A = System("A", 2)
B = System("B", 2)
C = System("C", 2)


def rand_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def haar_unitary(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def bell_state():
    psi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return Operator([A, B], np.outer(psi, psi.conj()))


class TestVonNeumann:
    def test_pure_state(self):
        assert von_neumann_entropy(Operator([A], basis_projector(2, 0))) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        assert von_neumann_entropy(Operator([A], np.eye(2) / 2)) == pytest.approx(LN2, abs=1e-12)

    def test_binary_spectrum(self):
        # scalar oracle: -0.75 ln 0.75 - 0.25 ln 0.25
        expected = -0.75 * math.log(0.75) - 0.25 * math.log(0.25)
        assert expected == pytest.approx(0.5623351446188083, abs=1e-15)
        rho = Operator([A], np.diag([0.75, 0.25]).astype(complex))
        assert von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-12)

    def test_bounds_and_unitary_invariance(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            dim = int(rng.integers(2, 6))
            s = System("X", dim)
            rho = Operator([s], rand_density(rng, dim))
            val = von_neumann_entropy(rho)
            assert -1e-12 <= val <= math.log(dim) + 1e-12
            u = haar_unitary(rng, dim)
            rot = Operator([s], u @ rho.mat @ u.conj().T)
            assert von_neumann_entropy(rot) == pytest.approx(val, abs=1e-10)


class TestShannon:
    def test_values(self):
        assert shannon_entropy([1.0, 0.0]) == 0.0
        assert shannon_entropy([0.5, 0.5]) == pytest.approx(LN2, abs=1e-12)
        assert shannon_entropy([0.75, 0.25]) == pytest.approx(0.5623351446188083, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            p = rng.dirichlet(np.ones(4))
            assert -1e-12 <= shannon_entropy(p) <= math.log(4) + 1e-12


class TestRelativeEntropy:
    def test_equal_states(self):
        rng = np.random.default_rng(22)
        rho = Operator([A], rand_density(rng, 2))
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)

    def test_pure_vs_mixed(self):
        rho = Operator([A], basis_projector(2, 0))
        sig = Operator([A], np.eye(2) / 2)
        assert relative_entropy(rho, sig) == pytest.approx(LN2, abs=1e-12)

    def test_support_violation(self):
        rho = Operator([A], np.eye(2) / 2)
        sig = Operator([A], basis_projector(2, 0))
        assert relative_entropy(rho, sig) == math.inf

    def test_klein_nonnegativity_and_faithfulness(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            dim = int(rng.integers(2, 5))
            s = System("X", dim)
            rho = Operator([s], rand_density(rng, dim))
            sig = Operator([s], rand_density(rng, dim))
            d = relative_entropy(rho, sig)
            assert d >= -1e-10
            if np.max(np.abs(rho.mat - sig.mat)) > 1e-6:
                assert d > 1e-10

    def test_data_processing(self):
        # random channels from Stinespring sampling must not increase D
        rng = np.random.default_rng(24)
        for _ in range(50):
            dim = 2
            s = System("X", dim)
            n_env = 3
            big = haar_unitary(rng, dim * n_env)
            iso = big[:, :dim]  # random isometry C^dim -> C^dim (x) C^env
            kraus = [iso.reshape(dim, n_env, dim)[:, e, :] for e in range(n_env)]
            rho = Operator([s], rand_density(rng, dim))
            sig = Operator([s], rand_density(rng, dim))

            def chan(x):
                return Operator([s], sum(k @ x.mat @ k.conj().T for k in kraus))

            assert relative_entropy(chan(rho), chan(sig)) <= relative_entropy(rho, sig) + 1e-9


class TestMutualInformation:
    def test_product_state(self):
        rng = np.random.default_rng(25)
        rho = tensor(Operator([A], rand_density(rng, 2)), Operator([B], rand_density(rng, 2)))
        assert mutual_information(rho, ["A"], ["B"]) == pytest.approx(0.0, abs=1e-10)

    def test_bell(self):
        assert mutual_information(bell_state(), ["A"], ["B"]) == pytest.approx(2 * LN2, abs=1e-10)

    def test_classically_correlated(self):
        mat = np.zeros((4, 4), dtype=complex)
        mat[0, 0] = 0.5
        mat[3, 3] = 0.5
        rho = Operator([A, B], mat)
        assert mutual_information(rho, ["A"], ["B"]) == pytest.approx(LN2, abs=1e-12)

    def test_matches_relative_entropy_form(self):
        rng = np.random.default_rng(26)
        for _ in range(50):
            rho = Operator([A, B], rand_density(rng, 4))
            marg = tensor(partial_trace(rho, ["A"]), partial_trace(rho, ["B"]))
            assert mutual_information(rho, ["A"], ["B"]) == pytest.approx(
                relative_entropy(rho, marg), abs=1e-9
            )


class TestConditionalEntropy:
    def test_product(self):
        rng = np.random.default_rng(27)
        a = Operator([A], rand_density(rng, 2))
        rho = tensor(a, Operator([B], rand_density(rng, 2)))
        assert conditional_entropy(rho, ["A"], ["B"]) == pytest.approx(
            von_neumann_entropy(a), abs=1e-10
        )

    def test_bell_negative(self):
        assert conditional_entropy(bell_state(), ["A"], ["B"]) == pytest.approx(-LN2, abs=1e-10)

    def test_classical_register_blocks(self):
        rng = np.random.default_rng(28)
        p = np.array([0.3, 0.7])
        rhos = [rand_density(rng, 2) for _ in p]
        mat = np.zeros((4, 4), dtype=complex)
        for k, (pk, r) in enumerate(zip(p, rhos)):
            mat += pk * np.kron(r, basis_projector(2, k))
        rho = Operator([A, B], mat)
        expected = sum(
            pk * von_neumann_entropy(Operator([A], r)) for pk, r in zip(p, rhos)
        )
        assert conditional_entropy(rho, ["A"], ["B"]) == pytest.approx(expected, abs=1e-10)


class TestCMI:
    def test_fully_product(self):
        rng = np.random.default_rng(29)
        rho = tensor(
            tensor(Operator([A], rand_density(rng, 2)), Operator([C], rand_density(rng, 2))),
            Operator([B], rand_density(rng, 2)),
        )
        assert conditional_mutual_information(rho, ["A"], ["C"], ["B"]) == pytest.approx(
            0.0, abs=1e-10
        )

    def test_trivial_conditioning(self):
        rng = np.random.default_rng(30)
        ac = Operator([A, C], rand_density(rng, 4))
        rho = tensor(ac, Operator([B], rand_density(rng, 2)))
        assert conditional_mutual_information(rho, ["A"], ["C"], ["B"]) == pytest.approx(
            mutual_information(ac, ["A"], ["C"]), abs=1e-10
        )

    def test_block_decomposition(self):
        rng = np.random.default_rng(31)
        blocks = [rand_density(rng, 4), rand_density(rng, 4)]
        mat = np.zeros((8, 8), dtype=complex)
        for k, blk in enumerate(blocks):
            # order blocks as (A, M) (x) |k><k|^K
            mat += 0.5 * np.kron(blk, basis_projector(2, k))
        m = System("M", 2)
        kreg = System("K", 2)
        rho = Operator([A, m, kreg], mat)
        expected = sum(
            0.5 * mutual_information(Operator([A, m], blk), ["A"], ["M"]) for blk in blocks
        )
        assert conditional_mutual_information(rho, ["A"], ["M"], ["K"]) == pytest.approx(
            expected, abs=1e-9
        )

    def test_strong_subadditivity(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            rho = Operator([A, B, C], rand_density(rng, 8))
            assert conditional_mutual_information(rho, ["A"], ["C"], ["B"]) >= -1e-9
