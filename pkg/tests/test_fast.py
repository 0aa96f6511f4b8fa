import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfourier.core import (
    Bits,
    BudgetExceeded,
    CircuitSpec,
    EnsembleSpec,
    Gate,
    NoiseParams,
    PreconditionError,
    TwirlSite,
)
from noisyfourier.ensembles import GeneratorConfig, build_fig1a, build_fig1b
from noisyfourier.fast import (
    approximate_output,
    count_low_weight,
    enumerate_low_weight,
    fast_spectrum_dense,
    fourier_component_fast,
    fourier_components_fast,
    layer_decomposition,
    support_vanishing_check,
    theorem1_experiment,
)
from noisyfourier.fourier import FourierIndex, wht_forward
from noisyfourier.oracle import joint_tables
from oracles import direct_wht, reference_joint

NOISE = NoiseParams(0.1, 0.2, 0.05)


class TestEnumeration:
    def test_order(self):
        got = [(str(s.s1), str(s.s2)) for s in enumerate_low_weight(1, 3)]
        assert got == [("0", "0"), ("1", "0"), ("0", "1"), ("1", "1")]

    @pytest.mark.parametrize("m, l", [(0, 1), (2, 0), (2, 3), (3, 7), (4, 2)])
    def test_count_is_binomial_sum(self, m, l):
        items = list(enumerate_low_weight(m, l))
        assert len(items) == count_low_weight(m, l) == sum(math.comb(2 * m, k) for k in range(l))
        assert len({s.value for s in items}) == len(items)
        assert all(s.weight < l for s in items)

    def test_weight_major(self):
        weights = [s.weight for s in enumerate_low_weight(3, 4)]
        assert weights == sorted(weights)

    def test_too_large(self):
        with pytest.raises(ValueError):
            list(enumerate_low_weight(2, 6))


def single_t():
    c = CircuitSpec(1, (Gate("H", (0,)), Gate("T", (0,)), Gate("H", (0,))), (TwirlSite(0, 0, 1),), (0,))
    return EnsembleSpec("fig1b", c, NOISE)


class TestComponents:
    def test_single_t_against_direct_sum(self):
        e = single_t()
        expected = direct_wht(reference_joint(e.circuit), 1)
        np.testing.assert_allclose(fast_spectrum_dense(e), expected, atol=1e-12)

    def test_single_t_frozen_values(self):
        # H T H on |0>: q[0|y] = cos^2(pi/8), sin^2, cos^2, sin^2 for y = 0..3,
        # so only s = 0 and s1 = 1 survive
        got = fast_spectrum_dense(single_t())
        r2 = math.sqrt(2) / 8
        np.testing.assert_allclose(got, [[0.25, r2, 0, 0], [0.25, -r2, 0, 0]], atol=1e-12)

    @given(st.integers(0, 10**5), st.integers(1, 3), st.integers(0, 3), st.integers(1, 3))
    def test_matches_oracle(self, seed, n, t, r):
        r = min(r, n)
        e = build_fig1b(n, 3, t, seed, r=r, noise=NOISE)
        q, _ = joint_tables(e.circuit, NOISE, noisy=False)
        np.testing.assert_allclose(fast_spectrum_dense(e), wht_forward(q).to_dense(), atol=1e-12)

    def test_pre_measure_rotation(self):
        gates = (Gate("T", (0,)), Gate("CNOT", (0, 1)))
        c = CircuitSpec(2, gates, (TwirlSite(0, 0, 0),), (1,), (Gate("H", (1,)),))
        e = EnsembleSpec("fig1b", c)
        np.testing.assert_allclose(fast_spectrum_dense(e), direct_wht(reference_joint(c), 1), atol=1e-12)

    def test_single_and_vector_agree(self):
        e = build_fig1b(2, 4, 3, 5, r=2, noise=NOISE)
        for sv in (0, 5, 17, 63):
            s = FourierIndex.from_int(sv, 3)
            vec = fourier_components_fast(e, s)
            for x in range(4):
                assert fourier_component_fast(e, Bits(2, x), s) == pytest.approx(vec[x], abs=1e-14)

    def test_requires_fig1b(self):
        e = build_fig1a(GeneratorConfig(1, 2, 0))
        with pytest.raises(PreconditionError):
            fourier_components_fast(e, FourierIndex.from_int(0, e.circuit.m))

    def test_index_length_checked(self):
        with pytest.raises(ValueError):
            fourier_components_fast(single_t(), FourierIndex.from_int(0, 2))


class TestApproximation:
    def test_l_zero_is_zero(self):
        value, budget = approximate_output(single_t(), Bits(2), Bits(1), 0)
        assert value == 0 and budget.enumerated == 0

    @pytest.mark.parametrize("seed", range(4))
    def test_full_series_recovers_noisy_oracle(self, seed):
        e = build_fig1b(2, 3, 3, seed, r=1, noise=NOISE)
        _, qn = joint_tables(e.circuit, NOISE)
        cond = qn.conditionals()
        for y in (0, 9, 63):
            for x in (0, 1):
                value, budget = approximate_output(e, Bits(6, y), Bits(1, x), 7)
                assert value == pytest.approx(cond[x, y], abs=1e-9)
                assert budget.enumerated == 64

    def test_l_is_clamped(self):
        _, budget = approximate_output(single_t(), Bits(2), Bits(1), 50)
        assert budget.l == 3 and budget.enumerated == 4

    def test_budget_refusal(self):
        e = build_fig1b(2, 3, 4, 1, r=1, noise=NOISE)
        with pytest.raises(BudgetExceeded) as info:
            approximate_output(e, Bits(8), Bits(1), 9, max_components=10)
        assert info.value.budget.enumerated == count_low_weight(4, 9)
        with pytest.raises(BudgetExceeded):
            approximate_output(e, Bits(8), Bits(1), 9, max_terms=1)

    def test_threads_do_not_change_result(self):
        e = build_fig1b(2, 4, 4, 3, r=2, noise=NOISE)
        a = approximate_output(e, Bits(8, 77), Bits(2, 1), 4, threads=1)
        b = approximate_output(e, Bits(8, 77), Bits(2, 1), 4, threads=3)
        assert a[0] == b[0] and a[1].pauli_terms == b[1].pauli_terms


class TestDeepNoisyCircuits:
    @pytest.mark.parametrize("n, d", [(1, 3), (2, 3), (3, 2)])
    def test_support_vanishes(self, n, d):
        e = build_fig1a(GeneratorConfig(n, d, 7, "HSCNOTT"))
        rep = support_vanishing_check(e)
        assert rep.d == d and rep.passed
        assert rep.layer_rule_violation < 1e-12
        assert len(rep.layers) == d

    def test_layers(self):
        e = build_fig1a(GeneratorConfig(2, 2, 0))
        assert layer_decomposition(e.circuit) == [[0, 1], [2, 3]]

    def test_uniformity_report(self):
        e = build_fig1a(GeneratorConfig(2, 4, 3, noise=NoiseParams(0.25, 0.25)))
        rep = theorem1_experiment(e, 100, 1)
        assert rep.applicable and rep.passed
        assert rep.threshold == pytest.approx(2 * math.exp(-1))

    def test_noiseless_flagged(self):
        e = build_fig1a(GeneratorConfig(2, 2, 3))
        rep = theorem1_experiment(e, 10, 1)
        assert not rep.applicable and rep.notes
