import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schmidt_measure.certificates import (
    concise_core,
    exact_rank_via_core,
    hyperdeterminant_222,
    matrix_pencil_min_rank,
    pencil_max_rank_at_most_two,
    pencil_min_rank_222,
    rank_222,
    substitution_lower_bound,
)
from schmidt_measure.linalg import haar_unitary

from conftest import ket, superpose


def ghz3():
    return superpose("000", "111").tensor()


def w3():
    return superpose("100", "010", "001").tensor()


def cp_tensor(terms, shape):
    """Sum of outer products; independent constructor for rank fixtures."""
    out = np.zeros(shape, dtype=complex)
    for vecs in terms:
        term = np.array(vecs[0], dtype=complex)
        for v in vecs[1:]:
            term = np.multiply.outer(term, np.array(v, dtype=complex))
        out += term
    return out


class TestHyperdeterminant:
    def test_ghz_value_frozen(self):
        # diagonal tensor with both entries 1/sqrt2: the only surviving
        # term is t000^2 t111^2 = 1/4
        assert hyperdeterminant_222(ghz3()) == pytest.approx(0.25, abs=1e-12)

    def test_w_vanishes(self):
        assert abs(hyperdeterminant_222(w3())) < 1e-12

    def test_product_vanishes(self):
        assert abs(hyperdeterminant_222(ket("000").tensor())) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_modulus_invariant_under_local_unitaries(self, seed):
        rng = np.random.default_rng(seed)
        t = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        t /= np.linalg.norm(t)
        before = abs(hyperdeterminant_222(t))
        for axis in range(3):
            u = haar_unitary(2, rng)
            t = np.moveaxis(np.tensordot(u, np.moveaxis(t, axis, 0), axes=1),
                            0, axis)
        assert abs(hyperdeterminant_222(t)) == pytest.approx(before, abs=1e-10)


class TestRank222:
    def test_product_is_one(self):
        assert rank_222(ket("010").tensor()) == 1

    def test_ghz_is_two(self):
        assert rank_222(ghz3()) == 2

    def test_w_is_three(self):
        assert rank_222(w3()) == 3

    def test_partial_product_is_two(self):
        # |0> tensor Bell pair: one flattening is rank 1, the rest rank 2
        psi = superpose("000", "011").tensor()
        assert rank_222(psi) == 2

    def test_generic_tensor_is_two(self):
        rng = np.random.default_rng(123)
        t = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        assert rank_222(t) == 2

    def test_explicit_two_term_construction(self):
        rng = np.random.default_rng(5)
        terms = [[rng.standard_normal(2) + 1j * rng.standard_normal(2)
                  for _ in range(3)] for _ in range(2)]
        assert rank_222(cp_tensor(terms, (2, 2, 2))) == 2

    def test_scale_invariance(self):
        assert rank_222(1e-7 * w3()) == 3
        assert rank_222(1e7 * ghz3()) == 2


class TestConciseCore:
    def test_spectator_qubit_drops_out(self):
        psi = superpose("0000", "0111").tensor()  # |0> (x) GHZ
        core, kept, mode_ranks = concise_core(psi)
        assert mode_ranks == (1, 2, 2, 2)
        assert kept == (1, 2, 3)
        assert core.shape == (2, 2, 2)
        assert rank_222(core) == 2

    def test_w4_core_is_itself(self):
        psi = superpose("0001", "0010", "0100", "1000").tensor()
        core, kept, mode_ranks = concise_core(psi)
        assert mode_ranks == (2, 2, 2, 2)
        assert core.shape == (2, 2, 2, 2)

    def test_full_product_collapses(self):
        assert exact_rank_via_core(ket("0101").tensor()) == 1

    def test_matrix_core_rank(self):
        # two qubits against one ququart-sized block
        rng = np.random.default_rng(9)
        t = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert exact_rank_via_core(t) == 4

    def test_core_preserves_222_rank(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            t = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal(
                (2, 2, 2))
            core, kept, _ = concise_core(t)
            if core.shape == (2, 2, 2):
                assert rank_222(core) == rank_222(t)


class TestMatrixPencil:
    def test_ghz_slices_reach_rank_one(self):
        # slices |00> and |11>: the pencil determinant has a root at 0
        s0 = np.array([[1, 0], [0, 0]], dtype=complex)
        s1 = np.array([[0, 0], [0, 1]], dtype=complex)
        assert matrix_pencil_min_rank(s0, s1) == 1

    def test_w_slices_never_degenerate(self):
        # slices of the three-party W state: det is a nonzero constant
        s0 = np.array([[0, 1], [1, 0]], dtype=complex) / np.sqrt(3)
        s1 = np.array([[1, 0], [0, 0]], dtype=complex) / np.sqrt(3)
        assert matrix_pencil_min_rank(s0, s1) == 2

    def test_proportional_slices(self):
        s = np.array([[1, 2], [3, 4]], dtype=complex)
        assert matrix_pencil_min_rank(s, -2 * s) == 0

    def test_singular_everywhere(self):
        s0 = np.array([[1, 0], [0, 0]], dtype=complex)
        s1 = np.array([[0, 1], [0, 0]], dtype=complex)
        assert matrix_pencil_min_rank(s0, s1) == 1


class TestPencil222:
    def test_w4_slice_pencil_is_three(self):
        # slices of the four-party W state along any qubit: a W-type cell
        # plus a multiple of |000>, which stays at rank three for every t
        s0 = w3()
        s1 = ket("000").tensor()
        assert pencil_min_rank_222(s0, s1) == 3

    def test_ghz4_slice_pencil_is_one(self):
        s0 = ket("000").tensor()
        s1 = ket("111").tensor()
        assert pencil_min_rank_222(s0, s1) == 1

    def test_generic_pencil_is_two(self):
        rng = np.random.default_rng(77)
        s0 = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        s1 = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        assert pencil_min_rank_222(s0, s1) == 2

    def test_proportional_slices(self):
        assert pencil_min_rank_222(w3(), 3.0 * w3()) == 0

    def test_max_rank_two_on_diagonal_span(self):
        assert pencil_max_rank_at_most_two(ket("000").tensor(),
                                           ket("111").tensor())

    def test_max_rank_fails_when_w_in_span(self):
        assert not pencil_max_rank_at_most_two(w3(), ket("000").tensor())


class TestSubstitutionBound:
    def test_w4_full_split_closes_at_four(self):
        psi = superpose("0001", "0010", "0100", "1000").tensor()
        assert substitution_lower_bound(psi) == 4

    def test_ghz4_gives_two(self):
        psi = superpose("0000", "1111").tensor()
        assert substitution_lower_bound(psi) == 2

    def test_w3_gives_three(self):
        assert substitution_lower_bound(w3()) == 3

    def test_ghz3_gives_two(self):
        assert substitution_lower_bound(ghz3()) == 2

    def test_bound_never_exceeds_rank_on_222(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            t = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal(
                (2, 2, 2))
            bound = substitution_lower_bound(t)
            assert bound is not None
            assert bound <= rank_222(t)

    def test_out_of_reach_shapes_return_none(self):
        rng = np.random.default_rng(15)
        t = rng.standard_normal((3, 3, 3)) + 1j * rng.standard_normal((3, 3, 3))
        assert substitution_lower_bound(t) is None


class TestExactRankViaCore:
    def test_ghz4_core_is_out_of_reach(self):
        # all four mode ranks are 2, so the core keeps four modes and the
        # trichotomy does not apply; the bracket machinery closes this one
        # through the slice-pencil bound instead
        psi = superpose("0000", "1111").tensor()
        assert exact_rank_via_core(psi) is None

    def test_spectator_w(self):
        psi = superpose("1000", "0100", "0010").tensor()  # W3 (x) |0>
        assert exact_rank_via_core(psi) == 3

    def test_w4_is_out_of_reach(self):
        psi = superpose("0001", "0010", "0100", "1000").tensor()
        assert exact_rank_via_core(psi) is None

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_agrees_with_trichotomy_on_222(self, seed):
        rng = np.random.default_rng(seed)
        t = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        assert exact_rank_via_core(t) == rank_222(t)
