import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from photonloss.errors import DimensionCapError, LayoutError, ZeroNormError
from photonloss.fock import (
    ModeLayout,
    Operator,
    StateVector,
    apply,
    basis_state,
    commutator_defect,
    embed,
    exp_operator,
    expm_hermitian,
    fidelity,
    identity,
    inner,
    ladder_op,
    make_layout,
    mode_marginal,
    normalize,
    random_state,
    single_mode_annihilation,
    tail_mass,
    unitarity_defect,
    vacuum,
    with_ancillas,
)

dims_st = st.lists(st.integers(1, 4), min_size=1, max_size=3)


class TestLayout:
    def test_mode_ids(self):
        lay = make_layout([3, 2], [5])
        assert lay.dims == (3, 2, 5)
        assert lay.info(1) == 1
        assert lay.anc(0) == 2
        assert lay.is_anc(2) and not lay.is_anc(0)
        assert lay.total_dim == 30

    @pytest.mark.parametrize("info, anc", [([], [2]), ([0], []), ([2], [-1])])
    def test_rejects_bad_dims(self, info, anc):
        with pytest.raises(LayoutError):
            make_layout(info, anc)

    def test_cap(self):
        with pytest.raises(DimensionCapError):
            make_layout([100, 100], [100, 100])
        with pytest.raises(DimensionCapError):
            make_layout([10], [10], max_amplitudes=50)

    def test_mode_out_of_range(self):
        lay = make_layout([2], [2])
        with pytest.raises(LayoutError):
            lay.check_mode(2)
        with pytest.raises(LayoutError):
            lay.anc(1)

    @given(dims_st, dims_st, st.data())
    @settings(max_examples=60, deadline=None)
    def test_flatten_round_trip(self, info, anc, data):
        lay = make_layout(info, anc)
        occ = tuple(data.draw(st.integers(0, d - 1)) for d in lay.dims)
        idx = lay.flatten(occ)
        assert 0 <= idx < lay.total_dim
        assert lay.unflatten(idx) == occ

    def test_flatten_rejects_overflow(self):
        lay = make_layout([2], [3])
        with pytest.raises(LayoutError):
            lay.flatten([2, 0])

    def test_dict_round_trip(self):
        lay = make_layout([2, 3], [4], [2])
        assert ModeLayout.from_dict(lay.to_dict()) == lay


class TestStateVector:
    def test_amps_read_only(self):
        s = vacuum(make_layout([2]))
        with pytest.raises(ValueError):
            s.amps[0] = 2

    def test_rejects_wrong_length_and_nan(self):
        lay = make_layout([2])
        with pytest.raises(LayoutError):
            StateVector(lay, np.ones(3))
        with pytest.raises(ValueError):
            StateVector(lay, np.array([np.nan, 0]))

    @given(dims_st, st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_json_round_trip_bit_exact(self, info, seed):
        s = random_state(make_layout(info, [2]), np.random.default_rng(seed))
        back = StateVector.from_json(s.to_json())
        assert back.layout == s.layout
        assert np.array_equal(back.amps, s.amps)

    def test_with_ancillas_vacuum(self, rng):
        info = random_state(make_layout([3]), rng)
        s = with_ancillas(info, [4, 2])
        t = s.tensor()
        np.testing.assert_array_equal(t[:, 0, 0], info.amps)
        assert np.abs(t[:, 1:, :]).max() == 0 and np.abs(t[:, :, 1:]).max() == 0

    def test_arithmetic_layout_mismatch(self):
        a = vacuum(make_layout([2]))
        b = vacuum(make_layout([3]))
        with pytest.raises(LayoutError):
            a + b


class TestLadder:
    @pytest.mark.parametrize("d", [1, 2, 5, 17])
    def test_commutator_defect_on_top_level_only(self, d):
        defect = commutator_defect(d)
        expected = np.zeros((d, d))
        expected[-1, -1] = -d
        np.testing.assert_allclose(defect, expected, atol=1e-12)

    def test_annihilation_elements(self):
        a = single_mode_annihilation(5)
        for n in range(1, 5):
            assert a[n - 1, n] == pytest.approx(np.sqrt(n))

    def test_ladder_adjoint(self):
        lay = make_layout([3], [4])
        a = ladder_op(lay, 1).to_dense()
        ad = ladder_op(lay, 1, "create").to_dense()
        np.testing.assert_allclose(ad, a.conj().T)

    def test_loss_from_vacuum_is_impossible(self):
        lay = make_layout([3])
        out = apply(ladder_op(lay, 0), vacuum(lay))
        with pytest.raises(ZeroNormError):
            normalize(out)

    def test_embed_matches_kron(self, rng):
        lay = make_layout([2, 3], [2])
        m = rng.normal(size=(3, 3))
        np.testing.assert_allclose(embed(lay, {1: m}).to_dense(), np.kron(np.kron(np.eye(2), m), np.eye(2)))


class TestOperator:
    def test_block_form_matches_sparse(self, rng):
        lay = make_layout([2], [3, 2])
        blocks = {
            (0,): (None, rng.normal(size=(2, 2))),
            (1,): (rng.normal(size=(3, 3)), None),
        }
        op = Operator(lay, None, blocks)
        x = rng.normal(size=lay.total_dim) + 0j
        np.testing.assert_allclose(op.apply_array(x), op.to_sparse() @ x, atol=1e-12)
        np.testing.assert_allclose(op.dagger().to_dense(), op.to_dense().conj().T)

    def test_blockwise_product(self, rng):
        lay = make_layout([2], [3])
        a = Operator(lay, None, {(0,): (rng.normal(size=(3, 3)),), (1,): (None,)})
        b = Operator(lay, None, {(0,): (rng.normal(size=(3, 3)),), (1,): (rng.normal(size=(3, 3)),)})
        np.testing.assert_allclose((a @ b).to_dense(), a.to_dense() @ b.to_dense(), atol=1e-12)

    def test_missing_sector_rejected(self):
        lay = make_layout([2], [2])
        with pytest.raises(ValueError):
            Operator(lay, None, {(0,): (None,)})

    def test_identity_unitary(self):
        lay = make_layout([2], [3])
        assert unitarity_defect(identity(lay)) == 0.0

    def test_expm_hermitian_matches_scipy(self, rng):
        h = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        h = h + h.conj().T
        np.testing.assert_allclose(expm_hermitian(h, 0.7), sla.expm(0.7j * h), atol=1e-12)

    def test_expm_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            expm_hermitian(np.array([[0, 1], [0, 0]]))

    def test_exp_operator_unitary(self, rng):
        lay = make_layout([3], [3])
        h = embed(lay, {0: np.diag([0.0, 1.0, 2.0]), 1: np.diag([1.0, -1.0, 0.5])})
        u = exp_operator(h, 0.3)
        assert u.is_unitary(1e-12)


class TestStateFunctions:
    def test_inner_and_fidelity(self, rng):
        lay = make_layout([4])
        s = random_state(lay, rng)
        assert inner(s, s) == pytest.approx(1.0)
        assert fidelity(s, s * np.exp(0.3j)) == pytest.approx(1.0)
        assert fidelity(basis_state(lay, [0]), basis_state(lay, [1])) == 0.0

    def test_fidelity_zero_norm(self):
        lay = make_layout([2])
        z = StateVector(lay, np.zeros(2))
        with pytest.raises(ZeroNormError):
            fidelity(z, vacuum(lay))

    def test_marginal_and_tail(self):
        lay = make_layout([2], [4])
        amps = np.zeros(8, dtype=complex)
        amps[lay.flatten([0, 3])] = np.sqrt(0.25)
        amps[lay.flatten([1, 1])] = np.sqrt(0.75)
        s = StateVector(lay, amps)
        np.testing.assert_allclose(mode_marginal(s, 1), [0, 0.75, 0, 0.25])
        assert tail_mass(s, 1, 2) == pytest.approx(0.25)
        assert tail_mass(s, 1, 3) == 0.0
