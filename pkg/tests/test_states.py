import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schmidt_measure import (DensityOperator, Ensemble, InputError,
                             PartyLayout, PureState, load_state, save_state,
                             state_from_dict, state_to_dict)


class TestPartyLayout:
    def test_basic(self):
        lay = PartyLayout([2, 3, 2])
        assert lay.n_parties == 3
        assert lay.total_dim == 12
        assert lay.block_dim([1, 3]) == 4

    def test_rejects_dimension_one(self):
        with pytest.raises(InputError):
            PartyLayout([2, 1, 2])

    def test_rejects_over_desk_cap(self):
        with pytest.raises(InputError):
            PartyLayout([2] * 13)          # 8192 > 4096
        PartyLayout([2] * 12)              # 4096 is allowed
        PartyLayout([2] * 13, max_total_dim=10000)

    def test_equality_and_hash(self):
        assert PartyLayout([2, 2]) == PartyLayout((2, 2))
        assert hash(PartyLayout([2, 2])) == hash(PartyLayout([2, 2]))


class TestPureState:
    def test_normalises(self):
        psi = PureState(PartyLayout([2, 2]), [2.0, 0, 0, 2.0])
        assert np.isclose(np.linalg.norm(psi.amplitudes), 1.0, atol=1e-12)
        assert np.isclose(abs(psi.amplitudes[0]), 1 / np.sqrt(2))

    def test_rejects_zero_vector(self):
        with pytest.raises(InputError):
            PureState(PartyLayout([2, 2]), np.zeros(4))

    def test_rejects_wrong_length(self):
        with pytest.raises(InputError):
            PureState(PartyLayout([2, 2]), np.ones(3))

    def test_party_one_most_significant(self):
        # |i1 i2> with i1=1, i2=0 must sit at flat index 2 for dims (2, 2)
        psi = PureState(PartyLayout([2, 2]), [0, 0, 1, 0])
        assert psi.tensor()[1, 0] == pytest.approx(1.0)
        assert psi.tensor()[0, 1] == 0.0

    def test_amplitudes_read_only(self):
        psi = PureState(PartyLayout([2, 2]), [1, 0, 0, 0])
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0.0

    def test_tensor_with(self):
        a = PureState(PartyLayout([2]), [1, 0])
        b = PureState(PartyLayout([2, 2]), [0, 1, 0, 0])
        ab = a.tensor_with(b)
        assert ab.layout.dims == (2, 2, 2)
        assert ab.amplitudes[1] == pytest.approx(1.0)


class TestDensityOperator:
    def test_from_pure_round_trip(self):
        psi = PureState(PartyLayout([2, 2]), [1, 0, 0, 1])
        rho = psi.density()
        assert rho.rank == 1
        assert rho.is_pure()
        back = rho.as_pure()
        assert abs(back.overlap(psi)) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_hermitian(self):
        m = np.eye(4, dtype=complex) / 4
        m[0, 1] = 1e-3
        with pytest.raises(InputError):
            DensityOperator(PartyLayout([2, 2]), m)

    def test_rejects_bad_trace(self):
        with pytest.raises(InputError):
            DensityOperator(PartyLayout([2, 2]), np.eye(4) / 2)

    def test_rejects_negative_eigenvalue(self):
        m = np.diag([0.6, 0.5, -0.1, 0.0]).astype(complex)
        with pytest.raises(InputError):
            DensityOperator(PartyLayout([2, 2]), m)

    def test_eig_ensemble_reassembles(self, rng):
        # random mixed state via partial mix of projectors
        d = 4
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = z @ z.conj().T
        m = m / np.trace(m).real
        rho = DensityOperator(PartyLayout([2, 2]), m)
        ens = rho.eig_ensemble()
        re = ens.assemble()
        assert np.max(np.abs(re.matrix - rho.matrix)) < 1e-10


class TestEnsemble:
    def test_weight_sum_enforced(self):
        psi = PureState(PartyLayout([2]), [1, 0])
        with pytest.raises(InputError):
            Ensemble([0.5, 0.4], [psi, psi])

    def test_layout_mismatch(self):
        a = PureState(PartyLayout([2]), [1, 0])
        b = PureState(PartyLayout([2, 2]), [1, 0, 0, 0])
        with pytest.raises(InputError):
            Ensemble([0.5, 0.5], [a, b])


class TestJsonFormat:
    def test_pure_round_trip(self, tmp_path):
        psi = PureState(PartyLayout([2, 2, 2]), np.arange(1, 9))
        p = tmp_path / "s.json"
        save_state(psi, p)
        again = load_state(p)
        assert isinstance(again, PureState)
        assert again.layout == psi.layout
        assert np.allclose(again.amplitudes, psi.amplitudes, atol=1e-15)

    def test_density_round_trip(self, tmp_path):
        psi = PureState(PartyLayout([2, 2]), [1, 0, 0, 1])
        rho = psi.density()
        p = tmp_path / "r.json"
        save_state(rho, p)
        again = load_state(p)
        assert isinstance(again, DensityOperator)
        assert np.max(np.abs(again.matrix - rho.matrix)) < 1e-12

    def test_rejects_unnormalised_without_flag(self):
        doc = {"kind": "pure", "dims": [2], "amplitudes": [[1.0, 0], [1.0, 0]]}
        with pytest.raises(InputError):
            state_from_dict(doc)
        doc["normalize"] = True
        psi = state_from_dict(doc)
        assert np.isclose(abs(psi.amplitudes[0]), 1 / np.sqrt(2))

    def test_rejects_unknown_kind(self):
        with pytest.raises(InputError):
            state_from_dict({"kind": "stabilizer", "dims": [2]})

    def test_rejects_bad_json_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(InputError):
            load_state(p)

    def test_dict_form_is_json_serialisable(self):
        psi = PureState(PartyLayout([2, 2]), [1, 1j, 0, 0])
        json.dumps(state_to_dict(psi))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
                min_size=4, max_size=4))
def test_construction_always_unit_norm(pairs):
    amps = np.array([complex(a, b) for a, b in pairs])
    if np.linalg.norm(amps) < 1e-6:
        return
    psi = PureState(PartyLayout([2, 2]), amps)
    assert abs(np.linalg.norm(psi.amplitudes) - 1.0) < 1e-12
