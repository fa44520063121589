"""Analysis and resynthesis of a signal through the STFT used by the gate."""

# %%
import numpy as np

from piezogate.spectral import FrameParams, TimeSignal, analyze, synthesize

fp = FrameParams()
print(f"window={fp.window_size} hop={fp.hop} bins={fp.bins} head pad={fp.head_pad}")

# %% A random second of audio survives the round trip to rounding level.
rng = np.random.default_rng(0)
x = TimeSignal(rng.standard_normal(44100), 44100.0)
spec = analyze(x, fp)
y = synthesize(spec, len(x))
print(f"frames={spec.frames} relative error={np.linalg.norm(y.samples - x.samples) / np.linalg.norm(x.samples):.2e}")

# %% The hop divides the window, so every sample is covered by four frames.
print("frames for 1..5 hops:", [fp.n_frames(k * fp.hop) for k in range(1, 6)])
