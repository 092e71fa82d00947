"""Per-clip feature vectors: MFCC summary statistics or wav2vec2 mean-pooling.

Clips are mono float64 at a fixed sample rate and duration when they
reach these functions (see ``audio.load_clip``). The mfcc-stats path
concatenates the per-coefficient mean and population std over frames, so
n_mfcc=13 yields a 26-dim row. The wav2vec2 path mean-pools the final
hidden states of a pretrained model over time (the standard linear-probe
convention).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, rfft

LOG_FLOOR = 1e-10  # silent frames must stay finite


@dataclass(frozen=True)
class MfccParams:
    n_mfcc: int = 13
    n_filters: int = 26
    frame_size: int = 400  # 25 ms at 16 kHz
    hop_size: int = 160  # 10 ms at 16 kHz
    n_fft: int = 512
    f_min: float = 20.0
    f_max: float | None = None  # defaults to Nyquist

    def __post_init__(self):
        if not 1 <= self.n_mfcc <= self.n_filters:
            raise ValueError("need 1 <= n_mfcc <= n_filters")
        if self.frame_size > self.n_fft:
            raise ValueError("frame_size must fit in n_fft")
        if self.hop_size < 1:
            raise ValueError("hop_size must be >= 1")


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(params: MfccParams, sample_rate: int) -> np.ndarray:
    """Triangular filters on a mel-spaced grid, (n_filters, n_fft//2 + 1)."""
    f_max = params.f_max if params.f_max is not None else sample_rate / 2.0
    mel_points = np.linspace(hz_to_mel(params.f_min), hz_to_mel(f_max), params.n_filters + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.floor((params.n_fft + 1) * hz_points / sample_rate).astype(int)
    bank = np.zeros((params.n_filters, params.n_fft // 2 + 1))
    for i in range(params.n_filters):
        lo, mid, hi = bins[i], bins[i + 1], bins[i + 2]
        for k in range(lo, mid):
            if mid > lo:
                bank[i, k] = (k - lo) / (mid - lo)
        for k in range(mid, hi):
            if hi > mid:
                bank[i, k] = (hi - k) / (hi - mid)
    return bank


def mfcc_frames(samples: np.ndarray, sample_rate: int, params: MfccParams) -> np.ndarray:
    """MFCC matrix (n_frames, n_mfcc) for one mono clip."""
    n = samples.size
    if n < params.frame_size:
        samples = np.pad(samples, (0, params.frame_size - n))
        n = samples.size
    n_frames = 1 + (n - params.frame_size) // params.hop_size
    idx = (
        np.arange(params.frame_size)[None, :]
        + params.hop_size * np.arange(n_frames)[:, None]
    )
    frames = samples[idx] * np.hamming(params.frame_size)
    spectrum = rfft(frames, n=params.n_fft, axis=1)
    power = (np.abs(spectrum) ** 2) / params.n_fft
    mel_energy = power @ mel_filterbank(params, sample_rate).T
    log_mel = np.log(np.maximum(mel_energy, LOG_FLOOR))
    coeffs = dct(log_mel, type=2, norm="ortho", axis=1)
    return coeffs[:, : params.n_mfcc]


def mfcc_stats(samples: np.ndarray, sample_rate: int, params: MfccParams) -> np.ndarray:
    """Concatenated per-coefficient mean and std: a 2*n_mfcc feature row."""
    coeffs = mfcc_frames(samples, sample_rate, params)
    return np.concatenate([coeffs.mean(axis=0), coeffs.std(axis=0)])


_WAV2VEC2_CACHE: dict[str, tuple] = {}


def _load_wav2vec2(model_id: str):
    if model_id not in _WAV2VEC2_CACHE:
        import torch  # noqa: F401  (backend for the transformers model)
        from transformers import AutoFeatureExtractor, AutoModel

        processor = AutoFeatureExtractor.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
        model.eval()
        _WAV2VEC2_CACHE[model_id] = (processor, model)
    return _WAV2VEC2_CACHE[model_id]


def wav2vec2_mean_pool(samples: np.ndarray, sample_rate: int, model_id: str) -> np.ndarray:
    """Final hidden states of a pretrained speech model, mean-pooled over time."""
    import torch

    processor, model = _load_wav2vec2(model_id)
    inputs = processor(
        samples.astype(np.float32), sampling_rate=sample_rate, return_tensors="pt"
    )
    with torch.no_grad():
        hidden = model(**inputs).last_hidden_state
    return hidden.mean(dim=1).squeeze(0).numpy().astype(np.float64)
