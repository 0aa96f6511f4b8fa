import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfourier.core import Bits, NoiseParams
from noisyfourier.ensembles import build_fig1b
from noisyfourier.fourier import (
    ErrorStats,
    FourierIndex,
    SpectrumTable,
    chebyshev_fraction,
    choose_l,
    choose_l_closed_form,
    clip_renormalise,
    decay_apply,
    decay_factor,
    error_statistics,
    parseval_gap,
    read_spectrum_jsonl,
    reconstruct_pseudo,
    truncate_spectrum,
    wht_forward,
    wht_inverse,
    write_spectrum_jsonl,
)
from noisyfourier.oracle import JointTable, joint_tables
from oracles import direct_wht


def random_table(m, r, seed):
    rng = np.random.default_rng(seed)
    q = rng.random((2**r, 4**m))
    return JointTable(m, r, q / q.sum())


class TestIndex:
    def test_weight_and_pairs(self):
        s = FourierIndex(Bits.from_str("101"), Bits.from_str("001"))
        assert s.weight == 3
        assert s.site_pair(0) == (1, 0)
        assert s.site_pair(2) == (1, 1)
        assert FourierIndex.from_int(s.value, 3) == s


class TestTransform:
    def test_constant_in_y(self):
        g = np.array([0.3, 0.7])
        spec = wht_forward(JointTable(1, 1, np.outer(g, np.full(4, 0.25)))).to_dense()
        np.testing.assert_allclose(spec[:, 0], g / 2)
        np.testing.assert_allclose(spec[:, 1:], 0)

    def test_delta_in_y(self):
        g = np.array([0.3, 0.7])
        q = np.zeros((2, 4))
        q[:, 0] = g
        np.testing.assert_allclose(wht_forward(JointTable(1, 1, q)).to_dense(), np.outer(g / 2, np.ones(4)))

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_direct_sum(self, seed):
        t = random_table(3, 2, seed)
        np.testing.assert_allclose(wht_forward(t).to_dense(), direct_wht(t.q, 3), atol=1e-12)

    @given(st.integers(0, 3), st.integers(0, 2), st.integers(0, 10**6))
    def test_round_trip_and_parseval(self, m, r, seed):
        t = random_table(m, r, seed)
        spec = wht_forward(t)
        for y in range(4**m):
            np.testing.assert_allclose(wht_inverse(spec, Bits(2 * m, y)), t.q[:, y], atol=1e-12)
        assert parseval_gap(t, spec) < 1e-12

    def test_incomplete_table(self):
        with pytest.raises(ValueError):
            wht_forward(np.zeros((2, 5)), m=1)
        with pytest.raises(ValueError):
            wht_forward(np.full((2, 4), np.nan), m=1)

    def test_inverse_of_sparse_inputs(self):
        assert not wht_inverse(SpectrumTable(2, 1), Bits(4, 3)).any()
        spec = SpectrumTable(2, 1, {(1, 0): 0.8})
        np.testing.assert_allclose(wht_inverse(spec, Bits(4, 9)), [0, 0.2])

    def test_non_finite_entries_rejected(self):
        with pytest.raises(ValueError):
            SpectrumTable(1, 1, {(0, 0): math.inf})


class TestDecay:
    def test_factor(self):
        s = FourierIndex(Bits.from_str("110"), Bits.from_str("001")).value
        assert decay_factor(s, 3, 0.1, 0.25) == pytest.approx(0.32)

    def test_zero_noise_unchanged(self):
        spec = wht_forward(random_table(2, 1, 0))
        assert decay_apply(spec, 0, 0).entries == spec.entries

    def test_range(self):
        with pytest.raises(ValueError):
            decay_apply(SpectrumTable(1, 1), 0.5, 0)

    @pytest.mark.parametrize("noise", [NoiseParams(0.1, 0.2), NoiseParams(0.05, 0.3, 0.1), NoiseParams(0, 0, 0.2)])
    def test_matches_noisy_oracle(self, noise):
        e = build_fig1b(2, 3, 3, 11, r=2, noise=noise)
        q, qn = joint_tables(e.circuit, noise)
        got = decay_apply(wht_forward(q), noise.e1, noise.e2, noise.e3).to_dense()
        np.testing.assert_allclose(got, wht_forward(qn).to_dense(), atol=1e-12)


class TestTruncation:
    def test_limits(self):
        spec = wht_forward(random_table(2, 1, 3))
        assert len(truncate_spectrum(spec, 0)) == 0
        assert truncate_spectrum(spec, 5).entries == spec.entries
        assert truncate_spectrum(spec, 2).weights() <= {0, 1}

    def test_reconstruct_full(self):
        t = random_table(2, 1, 4)
        spec = wht_forward(t)
        np.testing.assert_allclose(reconstruct_pseudo(spec, Bits(4, 6)), t.conditionals()[:, 6], atol=1e-12)

    def test_clip(self):
        np.testing.assert_allclose(clip_renormalise(np.array([-0.2, 0.6, 0.6])), [0, 0.5, 0.5])

    def test_jsonl_round_trip(self):
        spec = wht_forward(random_table(2, 2, 5))
        buf = io.StringIO()
        write_spectrum_jsonl(spec, buf)
        buf.seek(0)
        assert read_spectrum_jsonl(buf, 2, 2).entries == spec.entries


class TestErrorAccounting:
    def test_two_point_closed_form(self):
        # deltas 0.1 and 0.3: mean 0.2, population std 0.1
        p = np.array([[0.55, 0.65], [0.45, 0.35]])
        q = np.array([[0.5, 0.5], [0.5, 0.5]])
        stats = error_statistics(p, q)
        assert stats.delta0 == pytest.approx(0.2)
        assert stats.Delta == pytest.approx(0.1)
        assert stats.per_y == pytest.approx({0: 0.1, 1: 0.3})
        assert stats.c == pytest.approx(math.sqrt(2))

    def test_domain_mismatch(self):
        with pytest.raises(ValueError):
            error_statistics(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_bound(self):
        stats = ErrorStats(0.1, 0.05, {}, math.sqrt(2))
        assert stats.bound(0.1, 5) == pytest.approx(math.sqrt(2) * math.exp(-1))
        assert stats.within_bound(0.1, 5)

    def test_chebyshev(self):
        assert chebyshev_fraction(0.1, 0.05, 0.2) == pytest.approx(0.25)
        assert chebyshev_fraction(0.1, 1.0, 0.2) == 1.0
        with pytest.raises(ValueError):
            chebyshev_fraction(0.2, 0.1, 0.2)

    def test_choose_l_reference_value(self):
        assert choose_l_closed_form(0.1, 0.01, 0.01, 1) == pytest.approx(math.log(2200) / 0.2)
        assert choose_l(0.1, 0.01, 0.01, 1) == 39

    @given(st.floats(0.01, 0.45), st.floats(1e-4, 0.5), st.floats(1e-4, 1), st.integers(0, 6))
    def test_choose_l_is_minimal(self, eps, delta, eta, r):
        l = choose_l(eps, delta, eta, r)
        scale = 2**r * (1 + 1 / math.sqrt(eta))
        assert scale * math.exp(-2 * eps * l) <= delta
        if l > 0:
            assert scale * math.exp(-2 * eps * (l - 1)) > delta

    @pytest.mark.parametrize("bad", [(0, 0.1, 0.1), (0.1, 0, 0.1), (0.1, 0.1, 0), (0.5, 0.1, 0.1)])
    def test_choose_l_inputs(self, bad):
        with pytest.raises(ValueError):
            choose_l(*bad, r=1)
