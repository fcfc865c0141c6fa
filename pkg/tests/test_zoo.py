"""Construction checks for the named reference states."""

import numpy as np
import pytest

from conftest import ket

from schmidt_measure import InputError, zoo

SQRT2 = np.sqrt(2.0)


def bits(s: str):
    """Basis-state amplitude vector for a digit string."""
    return ket(s).amplitudes


class TestGhz:
    def test_three_qubits_has_two_amplitudes(self):
        psi = zoo.ghz(3)
        amp = psi.amplitudes
        assert amp[0b000] == pytest.approx(1 / SQRT2)
        assert amp[0b111] == pytest.approx(1 / SQRT2)
        assert np.count_nonzero(amp) == 2

    def test_two_qubits_is_a_bell_pair(self):
        expected = (bits("00") + bits("11")) / SQRT2
        assert np.allclose(zoo.ghz(2).amplitudes, expected)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_normalised(self, n):
        assert np.linalg.norm(zoo.ghz(n).amplitudes) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [-1, 0, 1])
    def test_rejects_fewer_than_two_parties(self, n):
        with pytest.raises(InputError):
            zoo.ghz(n)


class TestW:
    def test_three_qubits_matches_known_vector(self):
        expected = (bits("100") + bits("010") + bits("001")) / np.sqrt(3)
        assert np.allclose(zoo.w(3).amplitudes, expected)

    def test_four_qubits_matches_known_vector(self):
        expected = (bits("0001") + bits("0010") + bits("0100") + bits("1000")) / 2
        assert np.allclose(zoo.w(4).amplitudes, expected)

    def test_two_qubits_is_the_symmetric_bell_pair(self):
        expected = (bits("01") + bits("10")) / SQRT2
        assert np.allclose(zoo.w(2).amplitudes, expected)

    def test_rejects_single_party(self):
        with pytest.raises(InputError):
            zoo.w(1)


def test_cluster4_is_the_exact_vector():
    expected = (bits("0000") + bits("0011") + bits("1100") - bits("1111")) / 2
    assert np.allclose(zoo.cluster4().amplitudes, expected)


def test_bell_pair_product_is_ghz2_squared():
    pair = zoo.ghz(2).amplitudes
    assert np.allclose(zoo.bell_pair_product().amplitudes, np.kron(pair, pair))
    assert zoo.bell_pair_product().layout.dims == (2, 2, 2, 2)


class TestWerner:
    def test_lambda_zero_is_maximally_mixed(self):
        assert np.allclose(zoo.werner(0.0).matrix, np.eye(4) / 4)

    def test_lambda_one_is_the_singlet_projector(self):
        singlet = (bits("01") - bits("10")) / SQRT2
        assert np.allclose(zoo.werner(1.0).matrix, np.outer(singlet, singlet.conj()))

    @pytest.mark.parametrize("lam", [0.0, 0.25, 1 / 3, 0.9, 1.0])
    def test_unit_trace(self, lam):
        assert np.trace(zoo.werner(lam).matrix).real == pytest.approx(1.0)

    @pytest.mark.parametrize("lam", [-0.1, 1.1])
    def test_rejects_out_of_range_weight(self, lam):
        with pytest.raises(InputError):
            zoo.werner(lam)


class TestFlaggedBellMixture:
    def test_even_mixture_alias(self):
        third = 1 / 3
        assert np.allclose(
            zoo.rho_m().matrix, zoo.rho_lambda_mu(third, third).matrix
        )

    def test_lambda_one_is_a_pure_flagged_pair(self):
        rho = zoo.rho_lambda_mu(1.0, 0.0)
        assert rho.rank == 1
        expected = (bits("000") + bits("110")) / SQRT2
        overlap = expected.conj() @ rho.matrix @ expected
        assert overlap.real == pytest.approx(1.0)

    def test_mu_term_pairs_parties_two_and_three(self):
        rho = zoo.rho_lambda_mu(0.0, 1.0)
        expected = (bits("000") + bits("011")) / SQRT2
        overlap = expected.conj() @ rho.matrix @ expected
        assert overlap.real == pytest.approx(1.0)

    def test_remainder_term_pairs_parties_three_and_one(self):
        rho = zoo.rho_lambda_mu(0.0, 0.0)
        expected = (bits("000") + bits("101")) / SQRT2
        overlap = expected.conj() @ rho.matrix @ expected
        assert overlap.real == pytest.approx(1.0)

    def test_unit_trace_inside_the_simplex(self):
        rho = zoo.rho_lambda_mu(0.2, 0.5)
        assert np.trace(rho.matrix).real == pytest.approx(1.0)

    @pytest.mark.parametrize("lam,mu", [(-0.1, 0.5), (0.5, -0.1), (0.7, 0.6)])
    def test_rejects_weights_outside_the_simplex(self, lam, mu):
        with pytest.raises(InputError):
            zoo.rho_lambda_mu(lam, mu)


class TestGhzZeroMixture:
    def test_endpoints(self):
        ghz3 = zoo.ghz(3).amplitudes
        assert np.allclose(zoo.rho_g(1.0).matrix, np.outer(ghz3, ghz3.conj()))
        assert np.allclose(zoo.rho_g(0.0).matrix, np.outer(bits("000"), bits("000")))

    def test_interior_point_has_rank_two(self):
        assert zoo.rho_g(0.5).rank == 2

    def test_rejects_out_of_range_weight(self):
        with pytest.raises(InputError):
            zoo.rho_g(1.5)


class TestRegistry:
    def test_build_by_name_with_parameters(self):
        psi = zoo.build("ghz", n=4)
        assert np.allclose(psi.amplitudes, zoo.ghz(4).amplitudes)

    def test_unknown_name_rejected(self):
        with pytest.raises(InputError, match="unknown zoo state"):
            zoo.build("does_not_exist")

    def test_unknown_parameter_rejected(self):
        with pytest.raises(InputError, match="unexpected"):
            zoo.build("cluster4", n=3)

    def test_every_entry_builds_with_defaults(self):
        for entry in zoo.ZOO.values():
            defaults = {}
            if "lam" in entry.params:
                defaults["lam"] = 0.5
            if "mu" in entry.params:
                defaults["mu"] = 0.25
            state = entry.build(**defaults)
            assert state.layout.n_parties >= 2

    def test_pure_term_counts_are_the_frozen_table(self):
        # Verified reference values for the four-party states, keyed by
        # split; stored as integer term counts so log2(3) stays exact.
        frozen = {
            "ghz": {"1|2|3|4": 2, "12|3|4": 2, "12|34": 2, "13|24": 2, "123|4": 2},
            "w": {"1|2|3|4": 4, "12|3|4": 3, "12|34": 2, "13|24": 2, "123|4": 2},
            "cluster4": {"1|2|3|4": 4, "12|3|4": 2, "12|34": 2, "13|24": 4, "123|4": 2},
            "bell_pair_product": {"1|2|3|4": 4, "12|3|4": 2, "12|34": 1, "13|24": 4, "123|4": 2},
        }
        for name, table in frozen.items():
            assert dict(zoo.ZOO[name].expected) == table

    def test_expected_measure_resolves_pure_entries_to_log2(self):
        assert zoo.expected_measure(zoo.ZOO["w"], "12|3|4") == pytest.approx(
            np.log2(3.0)
        )
        assert zoo.expected_measure(zoo.ZOO["bell_pair_product"], "12|34") == 0.0

    def test_expected_measure_resolves_mixed_formulas(self):
        entry = zoo.ZOO["rho_lambda_mu"]
        assert zoo.expected_measure(entry, "12|3", lam=0.2, mu=0.3) == pytest.approx(0.8)
        assert zoo.expected_measure(entry, "13|2", lam=0.2, mu=0.3) == pytest.approx(0.5)
        assert zoo.expected_measure(entry, "23|1", lam=0.2, mu=0.3) == pytest.approx(0.7)
        assert zoo.expected_measure(entry, "1|2|3", lam=0.2, mu=0.3) == 1.0

    def test_expected_measure_werner_has_the_kink(self):
        entry = zoo.ZOO["werner"]
        assert zoo.expected_measure(entry, "1|2", lam=1 / 3) == pytest.approx(0.0)
        assert zoo.expected_measure(entry, "1|2", lam=0.2) == 0.0
        assert zoo.expected_measure(entry, "1|2", lam=0.7) == pytest.approx(0.55)

    def test_expected_measure_missing_split_is_none(self):
        assert zoo.expected_measure(zoo.ZOO["ghz"], "14|23") is None
