import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from piezogate.gate import GateParams
from piezogate.metrics import energy_ratio_db, snr_pair
from piezogate.pipeline import (
    MaskSequence,
    align,
    build_mask,
    process,
    process_with_mask,
)
from piezogate.sim import NO_LEAKAGE, MixSpec, make_pair, synth_fixture
from piezogate.spectral import FrameParams, TimeSignal, analyze

FS = 44100.0
FP = FrameParams()


def sig(x):
    return TimeSignal(np.asarray(x, dtype=float), FS)


def bin_tone(k, n, amp=1.0):
    return amp * np.sin(2 * np.pi * k * np.arange(n) / FP.window_size)


class TestBuildMask:
    def test_silent_pickup_decays(self):
        n = 10000
        mask = build_mask(sig(np.zeros(n)), FP, GateParams())
        expected = 0.95 ** (np.arange(mask.frames) + 1)
        np.testing.assert_allclose(mask.gains, np.repeat(expected[:, None], FP.bins, axis=1),
                                   rtol=1e-12)

    def test_all_above_threshold(self):
        x = np.random.default_rng(0).uniform(-1, 1, 8000)
        mask = build_mask(sig(x), FP, GateParams(th=0.0))
        assert np.all(mask.gains == 1.0)

    def test_hard_sinusoid_matches_oracle(self):
        k, n = 120, 6 * 2048
        x = bin_tone(k, n, amp=0.5)
        mask = build_mask(sig(x), FP, GateParams(th=4.0, mode="hard"))
        expected = oracles.hard_pass_set(x, 4.0)
        np.testing.assert_array_equal(mask.gains.astype(bool), expected)
        interior = mask.gains[5:-5]
        assert np.all(interior[:, k] == 1)
        assert np.all(interior[:, : k - 10] == 0)
        assert np.all(interior[:, k + 10 :] == 0)

    def test_deterministic(self):
        x = np.random.default_rng(1).standard_normal(9000)
        a = build_mask(sig(x), FP, GateParams()).gains
        b = build_mask(sig(x), FP, GateParams()).gains
        assert a.tobytes() == b.tobytes()

    def test_empty(self):
        with pytest.raises(ValueError):
            build_mask(sig([]), FP)


class TestProcessWithMask:
    def test_identity_mask(self):
        x = np.random.default_rng(2).uniform(-1, 1, 12345)
        out = process_with_mask(sig(x), MaskSequence.constant(1.0, len(x), FP))
        np.testing.assert_allclose(out.samples, x, atol=1e-10)

    def test_zero_mask(self):
        x = np.random.default_rng(3).uniform(-1, 1, 5000)
        out = process_with_mask(sig(x), MaskSequence.constant(0.0, len(x), FP))
        assert np.all(out.samples == 0)

    def test_self_gated_sinusoid(self):
        # Abrupt start and stop cost a fixed amount of edge energy; 40 windows
        # of steady tone keep it below the 40 dB bound.
        k, n = 80, 40 * 2048
        x = bin_tone(k, n, amp=0.5)
        mask = build_mask(sig(x), FP, GateParams(th=4.0, mode="hard"))
        out = process_with_mask(sig(x), mask).samples
        ref = oracles.masked_output(x, oracles.hard_pass_set(x, 4.0))
        np.testing.assert_allclose(out, ref, atol=1e-9)
        assert energy_ratio_db(x, x - ref) >= 40
        assert energy_ratio_db(x, x - out) >= 40

    def test_geometry_mismatch(self):
        mask = MaskSequence.constant(1.0, 4000, FP)
        with pytest.raises(ValueError, match="frames"):
            process_with_mask(sig(np.zeros(9000)), mask)

    def test_mask_range_validated(self):
        with pytest.raises(ValueError):
            MaskSequence(np.full((3, FP.bins), 1.5), FP)


class TestProcess:
    def test_silence(self):
        out = process(sig(np.zeros(6000)), sig(np.zeros(6000)), FP)
        assert np.all(out.samples == 0)

    def test_silent_pickup(self):
        x = np.random.default_rng(4).uniform(-1, 1, 20000)
        out = process(sig(x), sig(np.zeros(20000)), FP, GateParams())
        assert out.energy() <= sig(x).energy()
        n_frames = FP.n_frames(len(x))
        gains = 0.95 ** (np.arange(n_frames) + 1)
        explicit = MaskSequence(np.repeat(gains[:, None], FP.bins, axis=1), FP)
        np.testing.assert_allclose(out.samples, process_with_mask(sig(x), explicit).samples,
                                   atol=1e-14)

    def test_disjoint_fixture_improvement(self):
        fx = synth_fixture("disjoint-tones", 2.0, seed=11)
        pair = make_pair(fx.signal, fx.noises,
                         MixSpec(pickup_leak_db=NO_LEAKAGE, reverb_rt60_s=0.0, seed=11))
        gp = GateParams(th=0.01, mode="hard")
        mask = build_mask(pair.pickup, FP, gp)
        snr_o, snr_p = snr_pair(pair.mic_signal_part, pair.mic_noise_part, mask)
        assert snr_p - snr_o >= 20

        passed = oracles.hard_pass_set(pair.pickup.samples, 0.01)
        ref_s = oracles.masked_output(pair.mic_signal_part.samples, passed)
        ref_n = oracles.masked_output(pair.mic_noise_part.samples, passed)
        assert snr_p == pytest.approx(energy_ratio_db(ref_s, ref_n), abs=0.01)
        out = process(pair.mic, pair.pickup, FP, gp)
        np.testing.assert_allclose(out.samples, ref_s + ref_n, atol=1e-9)

    def test_rate_mismatch(self):
        with pytest.raises(ValueError, match="sample-rate"):
            process(sig(np.zeros(100)), TimeSignal(np.zeros(100), 48000.0))

    def test_empty(self):
        with pytest.raises(ValueError):
            process(sig([]), sig(np.zeros(10)))

    @pytest.mark.parametrize("n_pickup", [5000, 9000, 20000])
    def test_length_preserved(self, n_pickup):
        rng = np.random.default_rng(5)
        out = process(sig(rng.standard_normal(9000)), sig(rng.standard_normal(n_pickup)), FP)
        assert len(out) == 9000

    def test_longer_pickup_pads_mic(self):
        rng = np.random.default_rng(7)
        mic = rng.standard_normal(6000)
        pickup = 10 * rng.standard_normal(9000)
        out = process(sig(mic), sig(pickup), FP, GateParams(mode="hard", th=250.0))
        pass_set = oracles.hard_pass_set(pickup, 250.0)
        expected = oracles.masked_output(np.pad(mic, (0, 3000)), pass_set)[:6000]
        np.testing.assert_allclose(out.samples, expected, atol=1e-10)

    def test_lag_compensates_delay(self):
        rng = np.random.default_rng(6)
        y = rng.standard_normal(8000)
        delayed = np.concatenate([np.zeros(37), y])
        mic = sig(rng.standard_normal(8000))
        a = process(mic, sig(y), FP, GateParams(mode="hard", th=20.0))
        b = process(mic, sig(delayed), FP, GateParams(mode="hard", th=20.0), lag=37)
        np.testing.assert_array_equal(a.samples, b.samples)


class TestAlign:
    def test_positive_lag_advances(self):
        y = sig(np.arange(1, 6))
        np.testing.assert_array_equal(align(y, 5, 2).samples, [3, 4, 5, 0, 0])

    def test_negative_lag_delays(self):
        y = sig(np.arange(1, 6))
        np.testing.assert_array_equal(align(y, 6, -2).samples, [0, 0, 1, 2, 3, 4])

    def test_lag_beyond_length(self):
        assert np.all(align(sig(np.ones(5)), 5, 10).samples == 0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2048, 30000))
def test_linearity_under_fixed_mask(seed, n):
    rng = np.random.default_rng(seed)
    u, v, y = rng.uniform(-1, 1, (3, n))
    mask = build_mask(sig(y), FP, GateParams(th=15.0))
    lhs = process_with_mask(sig(u + v), mask).samples
    rhs = process_with_mask(sig(u), mask).samples + process_with_mask(sig(v), mask).samples
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(lhs)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_non_expansive_per_bin(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-1, 1, (2, 10000))
    mask = build_mask(sig(y), FP, GateParams(th=float(rng.uniform(0, 30))))
    X = analyze(sig(x), FP).data
    gated = X * mask.gains
    assert np.all(np.abs(gated) <= np.abs(X))
    assert np.all(np.sum(np.abs(gated) ** 2, axis=1) <= np.sum(np.abs(X) ** 2, axis=1))
