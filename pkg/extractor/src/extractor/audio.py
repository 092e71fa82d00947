"""WAV loading with resampling and fixed-duration padding."""

from __future__ import annotations

import math

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


def load_clip(path, target_rate: int, duration_s: float) -> np.ndarray:
    """Mono float64 samples in [-1, 1], resampled and padded/trimmed to
    exactly round(duration_s * target_rate) samples."""
    rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float64) / float(np.iinfo(data.dtype).max)
    else:
        data = data.astype(np.float64)
    if data.size == 0:
        raise ValueError("empty audio stream")
    if rate != target_rate:
        g = math.gcd(int(target_rate), int(rate))
        data = resample_poly(data, target_rate // g, rate // g)
    want = int(round(duration_s * target_rate))
    if data.size >= want:
        return data[:want]
    return np.pad(data, (0, want - data.size))
