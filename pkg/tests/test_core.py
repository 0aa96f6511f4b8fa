import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfourier.core import (
    ALL_NOISY,
    CLIFFORD_PERFECT_T,
    Bits,
    CircuitSpec,
    EnsembleSpec,
    Gate,
    NoiseParams,
    PauliString,
    PreconditionError,
    TwirlSite,
    binary_dot,
    depth_of,
    hamming_weight,
    pauli_mul,
    sigma_matrix,
)
from oracles import X, Y, Z, I2

paulis = st.builds(
    lambda n, x, z, ph: PauliString(n, x % (1 << n), z % (1 << n), ph),
    st.integers(1, 3),
    st.integers(0, 7),
    st.integers(0, 7),
    st.integers(0, 3),
)


class TestBits:
    def test_from_str_is_little_endian(self):
        b = Bits.from_str("1011")
        assert b.length == 4 and b.value == 0b1101
        assert list(b) == [1, 0, 1, 1]
        assert str(b) == "1011"

    def test_out_of_range_index(self):
        with pytest.raises(IndexError):
            Bits(3, 0)[3]

    def test_value_must_fit(self):
        with pytest.raises(ValueError):
            Bits(2, 4)

    @pytest.mark.parametrize("s, y, expected", [("10", "11", 1), ("11", "11", 0), ("00", "11", 0)])
    def test_binary_dot(self, s, y, expected):
        assert binary_dot(Bits.from_str(s), Bits.from_str(y)) == expected

    def test_split_and_concat(self):
        b = Bits.from_str("110100")
        lo, hi = b.split()
        assert (str(lo), str(hi)) == ("110", "100")
        assert lo.concat(hi) == b
        assert hamming_weight(b) == 3

    @given(st.integers(0, 255), st.integers(0, 255))
    def test_dot_is_bilinear(self, a, b):
        s, y, t = Bits(8, a), Bits(8, b), Bits(8, a ^ b)
        assert binary_dot(s ^ t, y) == (binary_dot(s, y) + binary_dot(t, y)) % 2


class TestPauliString:
    @pytest.mark.parametrize(
        "label, matrix",
        [("X", X), ("Y", Y), ("Z", Z), ("I", I2), ("-iY", -1j * Y), ("+iX", 1j * X)],
    )
    def test_labels_match_matrices(self, label, matrix):
        np.testing.assert_allclose(PauliString.from_label(label).to_matrix(), matrix)

    def test_qubit_zero_is_first_kron_factor(self):
        np.testing.assert_allclose(PauliString.from_label("XZ").to_matrix(), np.kron(X, Z))

    @pytest.mark.parametrize("label", ["XYZ", "-iZZI", "+iYIX", "-XXX"])
    def test_label_round_trip(self, label):
        p = PauliString.from_label(label)
        assert PauliString.from_label(p.label()) == p

    @given(paulis, paulis)
    def test_product_matches_matrices(self, p, q):
        if p.n != q.n:
            with pytest.raises(ValueError):
                pauli_mul(p, q)
            return
        np.testing.assert_allclose((p * q).to_matrix(), p.to_matrix() @ q.to_matrix(), atol=1e-12)

    @pytest.mark.parametrize("a, b", [(0, 0), (0, 1), (1, 0), (1, 1)])
    def test_sigma_matrix_order(self, a, b):
        expected = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)
        np.testing.assert_allclose(sigma_matrix(a, b), expected)


class TestGate:
    def test_arity_checked(self):
        with pytest.raises(ValueError):
            Gate("CNOT", (0,))
        with pytest.raises(ValueError):
            Gate("CNOT", (1, 1))

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            Gate("Unitary1", (0,), np.array([[1, 1], [0, 1]]))

    def test_round_trip_with_matrix(self):
        u = np.array([[0, 1j], [1j, 0]])
        g = Gate.from_dict(Gate("Unitary1", (2,), u).to_dict())
        np.testing.assert_allclose(g.unitary, u)
        assert g.targets == (2,)


def _tiny_circuit():
    gates = (Gate("H", (0,)), Gate("T", (0,)), Gate("CNOT", (0, 1)))
    return CircuitSpec(2, gates, (TwirlSite(0, 0, 1),), (0, 1))


class TestCircuitSpec:
    def test_counts(self):
        c = _tiny_circuit()
        assert (c.m, c.r) == (1, 2)

    def test_round_trip(self):
        c = _tiny_circuit()
        assert CircuitSpec.from_dict(c.to_dict()).to_dict() == c.to_dict()

    @pytest.mark.parametrize(
        "sites",
        [
            (TwirlSite(1, 0, 0),),  # ids not consecutive
            (TwirlSite(0, 5, 0),),  # wire out of range
            (TwirlSite(0, 0, 9),),  # position out of range
        ],
    )
    def test_bad_sites(self, sites):
        with pytest.raises(ValueError):
            CircuitSpec(2, (Gate("H", (0,)),), sites, (0,))

    def test_depth_is_min_sites_per_wire(self):
        gates = (Gate("H", (0,)), Gate("H", (1,)), Gate("H", (0,)))
        sites = (TwirlSite(0, 0, 0), TwirlSite(1, 1, 1), TwirlSite(2, 0, 2))
        assert depth_of(CircuitSpec(2, gates, sites, (0,))) == 1


class TestNoiseAndEnsemble:
    def test_eps_is_second_largest(self):
        assert NoiseParams(0.1, 0.3, 0.2).eps == 0.2

    @pytest.mark.parametrize("bad", [-0.1, 0.5, 0.7])
    def test_range(self, bad):
        with pytest.raises(ValueError):
            NoiseParams(bad, 0, 0)

    def test_fig1b_structure_accepts_tagged_t(self):
        e = EnsembleSpec(CLIFFORD_PERFECT_T, _tiny_circuit(), NoiseParams(0.1, 0.1))
        assert EnsembleSpec.from_dict(e.to_dict()).to_dict() == e.to_dict()

    def test_fig1b_rejects_untagged_t(self):
        c = CircuitSpec(1, (Gate("T", (0,)), Gate("T", (0,))), (TwirlSite(0, 0, 0),), (0,))
        with pytest.raises(PreconditionError):
            EnsembleSpec(CLIFFORD_PERFECT_T, c)

    def test_fig1b_rejects_site_after_clifford(self):
        c = CircuitSpec(1, (Gate("H", (0,)),), (TwirlSite(0, 0, 0),), (0,))
        with pytest.raises(PreconditionError):
            EnsembleSpec(CLIFFORD_PERFECT_T, c)

    def test_fig1a_needs_every_output_tagged(self):
        with pytest.raises(PreconditionError):
            EnsembleSpec(ALL_NOISY, _tiny_circuit())
