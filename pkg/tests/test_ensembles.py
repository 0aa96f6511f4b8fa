import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfourier.core import CapExceeded, depth_of
from noisyfourier.ensembles import (
    CounterRng,
    GeneratorConfig,
    anti_concentration_estimate,
    build_fig1a,
    build_fig1b,
    mix,
    sample_y,
    su4_from_angles,
)
from oracles import two_qubit_stabilizer_states


class TestRng:
    def test_reference_stream(self):
        # first outputs of the standard SplitMix64 generator seeded with 0
        assert mix(0, 0) == 0xE220A8397B1DCDAF
        assert mix(0, 1) == 0x6E789E6AA1B965F4

    def test_below_in_range(self):
        rng = CounterRng(5)
        draws = [rng.below(3) for _ in range(300)]
        assert set(draws) == {0, 1, 2}


class TestGenerators:
    def test_single_wire(self):
        e = build_fig1a(GeneratorConfig(1, 2, 9))
        assert e.circuit.m == 2 and {s.wire for s in e.circuit.twirl_sites} == {0}

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 2**64 - 1), st.sampled_from(["HTCNOT", "HSCNOTT", "SU4", "clifford"]))
    def test_fig1a_structure(self, n, d, seed, ws):
        e = build_fig1a(GeneratorConfig(n, d, seed, ws))
        assert depth_of(e.circuit) == d
        assert e.circuit.m == n * d

    def test_custom_layout(self):
        e = build_fig1a(GeneratorConfig(4, 4, 1, layout="custom"))
        assert depth_of(e.circuit) == 4

    def test_determinism(self):
        a = build_fig1a(GeneratorConfig(4, 3, 42))
        b = build_fig1a(GeneratorConfig(4, 3, 42))
        assert a.to_dict() == b.to_dict()
        assert build_fig1b(2, 3, 3, 7).to_dict() == build_fig1b(2, 3, 3, 7).to_dict()

    def test_fig1b_counts(self):
        e = build_fig1b(2, 3, 3, 7)
        assert e.circuit.m == 3
        assert all(e.circuit.gates[s.position].kind == "T" for s in e.circuit.twirl_sites)
        assert build_fig1b(2, 3, 0, 7).circuit.m == 0

    @pytest.mark.parametrize("bad", [dict(n=0, d=1), dict(n=1, d=0)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            build_fig1a(GeneratorConfig(**bad))
        with pytest.raises(ValueError):
            GeneratorConfig(1, 1, white_box_set="nope")

    def test_su4_is_unitary(self):
        u = su4_from_angles(np.linspace(0, 6, 15))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)


class TestSampling:
    def test_empty(self):
        assert [y.length for y in sample_y(0, 3, 1)] == [0, 0, 0]

    def test_reproducible(self):
        assert sample_y(2, 4, 1) == sample_y(2, 4, 1)
        assert [y.value for y in sample_y(2, 4, 1)] == [y.value for y in sample_y(2, 4, 1)]

    def test_bit_means(self):
        ys = sample_y(3, 10_000, 8)
        means = np.array([[y[j] for j in range(6)] for y in ys]).mean(axis=0)
        assert np.all(np.abs(means - 0.5) < 0.02)

    def test_wide_strings(self):
        ys = sample_y(40, 50, 2)
        assert max(y.value for y in ys) >> 64


class TestAntiConcentration:
    def test_enumerated_two_design_value(self):
        states = two_qubit_stabilizer_states()
        assert len(states) == 60
        collision = np.mean([np.sum(np.abs(v) ** 4) for v in states])
        assert 4 * collision == pytest.approx(1.6)

    def test_clifford_ensemble(self):
        rep = anti_concentration_estimate(GeneratorConfig(2, 12, white_box_set="clifford"), 600, 4)
        assert abs(rep.estimate - 1.6) <= 3 * rep.std_error

    def test_identity_is_concentrated(self):
        rep = anti_concentration_estimate(GeneratorConfig(2, 3, white_box_set="identity"), 20, 1, alpha_threshold=3.0)
        assert rep.estimate == pytest.approx(4.0)
        assert rep.passed is False

    def test_cap(self):
        with pytest.raises(CapExceeded):
            anti_concentration_estimate(GeneratorConfig(3, 1), 2, 0, cap=2)
