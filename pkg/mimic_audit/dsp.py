"""Signal kernels shared by every spectral feature.

Radix-2 FFT, framing and Hann windowing, power spectrogram, the 2595*log10
mel scale with its triangular filterbank, dB compression and orthonormal DCT-II.
Kernels accept a trailing axis of samples and broadcast over leading axes.
"""

from __future__ import annotations
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .audio_io import AudioClip
from .config import StftParams
from .errors import DimensionError, DomainError, EmptyInputError, FftSizeError, ParameterError
from .schema import N_MELS

ArrayLike = Union[float, np.ndarray]

DB_FLOOR = 1e-10


def hz_to_mel(f: ArrayLike) -> ArrayLike:
    f_arr = np.asarray(f, dtype=np.float64)
    if np.any(f_arr < 0):
        raise DomainError("frequency must be non-negative")
    m = 2595.0 * np.log10(1.0 + f_arr / 700.0)
    return float(m) if m.ndim == 0 else m


def mel_to_hz(m: ArrayLike) -> ArrayLike:
    m_arr = np.asarray(m, dtype=np.float64)
    if np.any(m_arr < 0):
        raise DomainError("mel value must be non-negative")
    f = 700.0 * (10.0 ** (m_arr / 2595.0) - 1.0)
    return float(f) if f.ndim == 0 else f


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


@lru_cache(maxsize=16)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=16)
def _twiddles(n: int) -> np.ndarray:
    w = np.exp(-2j * np.pi * np.arange(n // 2) / n)
    w.setflags(write=False)
    return w


def fft(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time radix-2 FFT along the last axis."""
    a = np.asarray(x)
    n = a.shape[-1]
    if not _is_power_of_two(n):
        raise FftSizeError(f"FFT length must be a power of two, got {n}")
    a = a[..., _bit_reversal(n)].astype(np.complex128)
    lead = a.shape[:-1]
    table = _twiddles(n)
    size = 2
    while size <= n:
        half = size // 2
        tw = table[:: n // size][:half]
        blocks = a.reshape(lead + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * tw
        a = np.concatenate((even + odd, even - odd), axis=-1).reshape(lead + (n,))
        size *= 2
    return a


def fft_real(x: np.ndarray) -> np.ndarray:
    """Non-negative frequency bins 0..N/2 of a real signal's DFT."""
    a = np.asarray(x, dtype=np.float64)
    n = a.shape[-1]
    return fft(a)[..., : n // 2 + 1]


@lru_cache(maxsize=8)
def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window (DFT-even), as used for spectral analysis."""
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    w.setflags(write=False)
    return w


def frame_signal(samples: np.ndarray, params: StftParams) -> np.ndarray:
    """Slice a signal into [n_frames x frame_length] frames.

    Centred framing reflect-pads frame_length/2 on both sides so frame t is
    centred on sample t*hop. Uncentred framing zero-pads a signal shorter than
    one frame up to a single full frame.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("cannot frame an empty signal")
    n = params.frame_length
    if params.centered:
        x = np.pad(x, n // 2, mode="reflect")
    elif x.size < n:
        x = np.pad(x, (0, n - x.size))
    frames = np.lib.stride_tricks.sliding_window_view(x, n)[:: params.hop_length]
    return np.ascontiguousarray(frames)


@dataclass(frozen=True)
class Spectrogram:
    power: np.ndarray  # [n_bins x n_frames]
    bin_freqs: np.ndarray
    params: StftParams
    sample_rate: int

    @property
    def n_bins(self) -> int:
        return int(self.power.shape[0])

    @property
    def n_frames(self) -> int:
        return int(self.power.shape[1])

    @property
    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.power)


def bin_frequencies(sample_rate: int, frame_length: int) -> np.ndarray:
    return np.arange(frame_length // 2 + 1) * (sample_rate / frame_length)


def power_spectrogram(clip: AudioClip, params: Optional[StftParams] = None) -> Spectrogram:
    params = params or StftParams()
    if len(clip) == 0:
        raise EmptyInputError(f"empty clip {clip.source_path or ''}".strip())
    frames = frame_signal(clip.samples, params) * hann_window(params.frame_length)
    spectrum = fft_real(frames)
    power = (spectrum.real ** 2 + spectrum.imag ** 2).T
    return Spectrogram(
        power=np.ascontiguousarray(power),
        bin_freqs=bin_frequencies(clip.sample_rate, params.frame_length),
        params=params,
        sample_rate=clip.sample_rate,
    )


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # [n_mels x n_bins]
    hz_edges: np.ndarray  # n_mels + 2 edge frequencies; filter i peaks at hz_edges[i + 1]
    sample_rate: int

    @property
    def n_mels(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.weights.shape[1])

    @property
    def center_freqs(self) -> np.ndarray:
        return self.hz_edges[1:-1]

    def apply(self, power: np.ndarray) -> np.ndarray:
        if power.shape[0] != self.n_bins:
            raise DimensionError(f"filterbank expects {self.n_bins} bins, spectrogram has {power.shape[0]}")
        return self.weights @ power


@lru_cache(maxsize=8)
def _filterbank(n_mels: int, n_bins: int, sample_rate: int, f_min: float, f_max: float) -> MelFilterbank:
    mel_edges = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    hz_edges = mel_to_hz(mel_edges)
    freqs = np.arange(n_bins) * (sample_rate / (2.0 * (n_bins - 1)))

    lower, center, upper = hz_edges[:-2, None], hz_edges[1:-1, None], hz_edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    weights *= (2.0 / (hz_edges[2:] - hz_edges[:-2]))[:, None]

    weights.setflags(write=False)
    hz_edges.setflags(write=False)
    return MelFilterbank(weights=weights, hz_edges=hz_edges, sample_rate=sample_rate)


def mel_filterbank(n_mels: int = N_MELS, n_bins: int = 1025, sample_rate: int = 22050,
                   f_min: float = 0.0, f_max: Optional[float] = None) -> MelFilterbank:
    nyquist = sample_rate / 2.0
    f_max = nyquist if f_max is None else float(f_max)
    if n_mels < 1:
        raise ParameterError(f"n_mels must be >= 1, got {n_mels}")
    if n_bins < 2:
        raise ParameterError(f"n_bins must be >= 2, got {n_bins}")
    if not 0.0 <= f_min < f_max <= nyquist:
        raise ParameterError(f"need 0 <= f_min < f_max <= {nyquist}, got f_min={f_min}, f_max={f_max}")
    return _filterbank(int(n_mels), int(n_bins), int(sample_rate), float(f_min), f_max)


def power_to_db(p: ArrayLike) -> ArrayLike:
    db = 10.0 * np.log10(np.maximum(np.asarray(p, dtype=np.float64), DB_FLOOR))
    return float(db) if db.ndim == 0 else db


@lru_cache(maxsize=8)
def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    t = np.arange(n)[None, :]
    basis = np.cos(np.pi * k * (2 * t + 1) / (2 * n))
    basis[0] *= np.sqrt(1.0 / n)
    basis[1:] *= np.sqrt(2.0 / n)
    basis.setflags(write=False)
    return basis


def dct2_ortho(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Orthonormal DCT-II along `axis`."""
    a = np.asarray(v, dtype=np.float64)
    if a.ndim == 0 or a.shape[axis] < 1:
        raise EmptyInputError("DCT needs at least one value")
    moved = np.moveaxis(a, axis, -1)
    out = moved @ _dct_matrix(moved.shape[-1]).T
    return np.moveaxis(out, -1, axis)
