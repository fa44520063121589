"""Sweep the gate parameters and watch noise reduction trade against distortion."""

# %%
import numpy as np

from piezogate.metrics import sweep
from piezogate.sim import MixSpec, make_pair, synth_fixture

fx = synth_fixture("plucked-vs-band", duration_s=8.0, seed=0)
pair = make_pair(fx.signal, fx.noises, MixSpec(mic_snr_db=-2.55, seed=0))
parts = (pair.mic_signal_part, pair.mic_noise_part, pair.pickup)

# %% A higher threshold removes more noise and more of the instrument.
print("   th   SNR_p   SDR_m")
for rep in sweep(*parts, "th", np.linspace(0.5, 16, 7), workers=4):
    print(f"{rep.gate.th:5.2f} {rep.snr_p_db:7.2f} {rep.sdr_m_db:7.2f}")

# %% Slower decay keeps released bins open longer.
print("    d   SNR_p   SDR_m")
for rep in sweep(*parts, "d", np.linspace(0.5, 0.99, 6), workers=4):
    print(f"{rep.gate.d:5.3f} {rep.snr_p_db:7.2f} {rep.sdr_m_db:7.2f}")

# %% A larger rise factor opens bins more slowly after an onset.
print("    r   SNR_p   SDR_m")
for rep in sweep(*parts, "r", np.linspace(0.05, 0.9, 6), workers=4):
    print(f"{rep.gate.r:5.2f} {rep.snr_p_db:7.2f} {rep.sdr_m_db:7.2f}")
