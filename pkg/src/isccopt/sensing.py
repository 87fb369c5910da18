"""Synthetic FMCW echo generation and the sensing processing chain:
SVD clutter filter, slow-time aggregation, STFT spectrogram, plus the
sensing cost model.

The chirp waveform is a baseband linear chirp with slope bandwidth/duration;
the target adds a per-chirp Doppler phase rotation, clutter paths are static.
Only the statistical structure matters downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TargetPath:
    delay: float
    doppler_hz: float
    gain: complex


@dataclass(frozen=True)
class ClutterPath:
    delay: float
    gain: complex


@dataclass(frozen=True)
class EchoParams:
    """Echo scene: transmit power, chirp timing, one moving target, static
    clutter paths, and the complex noise power spectral density."""

    power: float
    chirp_duration: float
    n_chirps: int
    sample_rate: float
    target: TargetPath
    clutter: tuple[ClutterPath, ...] = ()
    noise_psd: float = 0.0
    chirp_bandwidth: float = 1e6

    def __post_init__(self):
        object.__setattr__(self, "clutter", tuple(self.clutter))
        if self.power < 0:
            raise ValueError("sensing power must be nonnegative")
        if self.sample_rate * self.chirp_duration < 1:
            raise ValueError("need at least one fast-time sample per chirp")
        delays = [self.target.delay] + [c.delay for c in self.clutter]
        if any(not 0 <= d < self.chirp_duration for d in delays):
            raise ValueError("path delays must lie in [0, chirp_duration)")
        if self.noise_psd < 0:
            raise ValueError("noise psd must be nonnegative")

    @property
    def n_fast(self) -> int:
        return int(np.floor(self.sample_rate * self.chirp_duration))


def _chirp(t, duration, bandwidth):
    """Baseband linear chirp, zero outside [0, duration)."""
    inside = (t >= 0) & (t < duration)
    phase = np.pi * (bandwidth / duration) * t**2
    return np.where(inside, np.exp(1j * phase), 0.0)


def generate_echo(params: EchoParams, seed: int) -> np.ndarray:
    """Sampled echo matrix of shape (fast-time, n_chirps).

    Column m holds chirp m: sqrt(P)*h0*chirp(t - tau0) rotated by the
    per-chirp Doppler phase, plus static clutter copies, plus complex
    Gaussian noise with total per-sample variance noise_psd * sample_rate.
    Deterministic given seed.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(params.n_fast) / params.sample_rate
    amp = np.sqrt(params.power)
    doppler = np.exp(
        2j * np.pi * params.target.doppler_hz * params.chirp_duration
        * np.arange(params.n_chirps))
    target_fast = amp * params.target.gain * _chirp(
        t - params.target.delay, params.chirp_duration, params.chirp_bandwidth)
    data = np.outer(target_fast, doppler).astype(complex)
    for path in params.clutter:
        fast = amp * path.gain * _chirp(
            t - path.delay, params.chirp_duration, params.chirp_bandwidth)
        data += fast[:, None]
    if params.noise_psd > 0:
        sigma = np.sqrt(params.noise_psd * params.sample_rate / 2.0)
        shape = (params.n_fast, params.n_chirps)
        data += sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return data


def clutter_filter(y: np.ndarray, r1: int, r2: int) -> np.ndarray:
    """Keep singular components r1..r2 (1-indexed, descending order) of y."""
    y = np.asarray(y)
    if not np.all(np.isfinite(y.real)) or not np.all(np.isfinite(y.imag)):
        raise ValueError("non-finite entries in sensing matrix")
    min_dim = min(y.shape)
    if not 1 <= r1 <= r2 <= min_dim:
        raise ValueError(f"need 1 <= r1 <= r2 <= {min_dim}, got ({r1}, {r2})")
    u, s, vh = np.linalg.svd(y, full_matrices=False)
    keep = slice(r1 - 1, r2)
    return (u[:, keep] * s[keep]) @ vh[keep, :]


def spectrogram(ybar: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    """Unit-norm magnitude spectrogram of the slow-time signal.

    The matrix is summed over the fast-time (row) axis into a slow-time
    vector; a Hann-windowed STFT (frame length window_len, step hop) is
    taken, magnitudes are flattened frame-major and normalized to unit
    Euclidean norm. An all-zero input maps to the zero vector with a
    warning.
    """
    ybar = np.asarray(ybar)
    n_slow = ybar.shape[1]
    if window_len > n_slow:
        raise ValueError(f"window {window_len} longer than slow-time axis {n_slow}")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    slow = ybar.sum(axis=0)
    window = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(window_len) / window_len))
    starts = range(0, n_slow - window_len + 1, hop)
    frames = np.stack([slow[s:s + window_len] * window for s in starts])
    mags = np.abs(np.fft.fft(frames, axis=1)).reshape(-1)
    norm = np.linalg.norm(mags)
    if norm == 0.0:
        warnings.warn("all-zero sensing input: spectrogram left unnormalized",
                      RuntimeWarning, stacklevel=2)
        return mags
    return mags / norm


def spectrogram_size(n_slow: int, window_len: int, hop: int) -> int:
    """Output length of `spectrogram` for given slow-time length."""
    frames = (n_slow - window_len) // hop + 1
    return frames * window_len


def sensing_cost(p_s: float, t0: float, m: int) -> tuple[float, float]:
    """(latency, energy) of an M-chirp sensing round: T = t0*m, E = p_s*T."""
    if t0 <= 0 or m <= 0:
        raise ValueError("chirp duration and count must be positive")
    if p_s < 0:
        raise ValueError("sensing power must be nonnegative")
    t_sen = t0 * m
    return t_sen, p_s * t_sen
