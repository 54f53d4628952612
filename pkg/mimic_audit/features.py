"""The 26-value clip descriptor.

Order is frozen by `schema.FEATURE_NAMES`: zcr, rmse, centroid, bandwidth,
rolloff, chroma, mfcc01..mfcc20. Each value is a mean over analysis frames.
"""

from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .audio_io import AudioClip, load_clip
from .config import StftParams
from .dsp import MelFilterbank, Spectrogram, dct2_ortho, frame_signal, mel_filterbank, power_spectrogram, power_to_db
from .errors import DimensionError, EmptyInputError, ParameterError
from .schema import ANALYSIS_RATE, FEATURE_NAMES, MAX_SECONDS, N_FEATURES, N_MELS, N_MFCC, SCHEMA_VERSION

ROLLOFF_FRACTION = 0.85
# Pitch class of A4 (440 Hz) with C = 0.
A440_CLASS = 9


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.size != N_FEATURES:
            raise DimensionError(f"feature vector needs {N_FEATURES} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("feature vector contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])

    def as_dict(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(FEATURE_NAMES, self.values)}

    @property
    def mfcc(self) -> np.ndarray:
        return self.values[6:]


def _frames(clip: AudioClip, params: StftParams) -> np.ndarray:
    if len(clip) == 0:
        raise EmptyInputError(f"empty clip {clip.source_path}".strip())
    return frame_signal(clip.samples, params)


def zero_crossing_rate(clip: AudioClip, params: Optional[StftParams] = None) -> float:
    """Mean over frames of (sign changes between adjacent samples) / frame_length; sign(0) = +."""
    frames = _frames(clip, params or StftParams())
    signs = frames >= 0.0
    crossings = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1)
    return float(np.mean(crossings / frames.shape[1]))


def rmse(clip: AudioClip, params: Optional[StftParams] = None) -> float:
    frames = _frames(clip, params or StftParams())
    return float(np.mean(np.sqrt(np.mean(frames ** 2, axis=1))))


def _frame_centroids(mag: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    total = mag.sum(axis=0)
    weighted = freqs @ mag
    return np.divide(weighted, total, out=np.zeros_like(total), where=total > 0)


def spectral_centroid(spec: Spectrogram) -> float:
    """Magnitude-weighted mean frequency; silent frames count as 0 Hz."""
    return float(np.mean(_frame_centroids(spec.magnitude, spec.bin_freqs)))


def spectral_bandwidth(spec: Spectrogram) -> float:
    mag = spec.magnitude
    total = mag.sum(axis=0)
    centroid = _frame_centroids(mag, spec.bin_freqs)
    spread = ((spec.bin_freqs[:, None] - centroid[None, :]) ** 2 * mag).sum(axis=0)
    variance = np.divide(spread, total, out=np.zeros_like(total), where=total > 0)
    return float(np.mean(np.sqrt(variance)))


def spectral_rolloff(spec: Spectrogram, fraction: float = ROLLOFF_FRACTION) -> float:
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"roll-off fraction must lie in (0, 1], got {fraction}")
    cumulative = np.cumsum(spec.magnitude, axis=0)
    total = cumulative[-1]
    reached = cumulative >= fraction * total[None, :]
    first = np.argmax(reached, axis=0)
    rolloff = np.where(total > 0, spec.bin_freqs[first], 0.0)
    return float(np.mean(rolloff))


def pitch_classes(bin_freqs: np.ndarray) -> np.ndarray:
    """Pitch class per bin (A440 tuning, C = 0); -1 marks the DC bin."""
    classes = np.full(bin_freqs.shape, -1, dtype=np.int64)
    positive = bin_freqs > 0
    semitones = np.round(12.0 * np.log2(bin_freqs[positive] / 440.0)).astype(np.int64)
    classes[positive] = (semitones + A440_CLASS) % 12
    return classes


def chroma_profile(spec: Spectrogram) -> np.ndarray:
    """[12 x n_frames] class energies, each frame scaled so its largest class is 1."""
    classes = pitch_classes(spec.bin_freqs)
    profile = np.zeros((12, spec.n_frames))
    for c in range(12):
        profile[c] = spec.power[classes == c].sum(axis=0)
    peak = profile.max(axis=0)
    return np.divide(profile, peak[None, :], out=np.zeros_like(profile), where=peak[None, :] > 0)


def chroma_mean(spec: Spectrogram) -> float:
    if spec.n_frames == 0:
        raise EmptyInputError("empty spectrogram")
    return float(np.mean(chroma_profile(spec)))


def mfcc(spec: Spectrogram, fb: Optional[MelFilterbank] = None, n_coeffs: int = N_MFCC) -> np.ndarray:
    """Frame-mean of the first `n_coeffs` DCT coefficients of log mel energies."""
    fb = fb or mel_filterbank(N_MELS, spec.n_bins, spec.sample_rate)
    if fb.n_bins != spec.n_bins:
        raise DimensionError(f"filterbank has {fb.n_bins} bins, spectrogram has {spec.n_bins}")
    if not 1 <= n_coeffs <= fb.n_mels:
        raise ParameterError(f"n_coeffs must lie in [1, {fb.n_mels}], got {n_coeffs}")
    log_mel = power_to_db(fb.apply(spec.power))
    coeffs = dct2_ortho(log_mel, axis=0)[:n_coeffs]
    return coeffs.mean(axis=1)


def extract_features(clip: AudioClip, params: Optional[StftParams] = None) -> FeatureVector:
    params = params or StftParams()
    spec = power_spectrogram(clip, params)
    fb = mel_filterbank(N_MELS, spec.n_bins, clip.sample_rate)
    head = [
        zero_crossing_rate(clip, params),
        rmse(clip, params),
        spectral_centroid(spec),
        spectral_bandwidth(spec),
        spectral_rolloff(spec),
        chroma_mean(spec),
    ]
    return FeatureVector(np.concatenate([head, mfcc(spec, fb, N_MFCC)]))


def extract_file(path: str, target_rate: int = ANALYSIS_RATE, max_seconds: float = MAX_SECONDS) -> FeatureVector:
    return extract_features(load_clip(path, target_rate, max_seconds))


def _extract_job(job):
    path, target_rate, max_seconds = job
    try:
        return extract_file(path, target_rate, max_seconds), None
    except Exception as e:
        return None, e


def extract_batch(paths: Sequence[str], workers: int = 1, target_rate: int = ANALYSIS_RATE,
                  max_seconds: float = MAX_SECONDS) -> List[tuple]:
    """Extract every path; returns (FeatureVector | None, error | None) in input order."""
    jobs = [(str(p), target_rate, max_seconds) for p in paths]
    if workers <= 1 or len(jobs) <= 1:
        return [_extract_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_extract_job, jobs))
