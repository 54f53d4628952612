"""Synthetic labelled corpus for smoke runs and pipeline tests.

Real clips are harmonic tones over a low noise floor; faked clips are
band-passed noise bursts. Files follow the corpus naming convention and mix
sample rates, sample formats and channel counts so that ingestion is exercised.
"""

from __future__ import annotations
from typing import List
import os

import numpy as np
from rich import print

from .audio_io import encode_wav
from .errors import ParameterError, PathAccessError
from .io_utils import atomic_write_bytes
from .schema import Label

SYNTH_RATES = (22050, 44100)
SYNTH_FORMATS = ("pcm16", "float32")


def harmonic_tone(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / rate
    f0 = rng.uniform(110.0, 330.0)
    vibrato = 1.0 + 0.01 * np.sin(2.0 * np.pi * rng.uniform(4.0, 6.0) * t)
    phase = 2.0 * np.pi * f0 * np.cumsum(vibrato) / rate
    x = np.zeros(n)
    for k in range(1, 7):
        x += rng.uniform(0.3, 1.0) / k * np.sin(k * phase)
    x += 0.01 * rng.standard_normal(n)
    return 0.6 * x / np.max(np.abs(x))


def noise_bursts(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    lo = rng.uniform(1500.0, 3000.0)
    hi = lo + rng.uniform(2000.0, 5000.0)
    spectrum[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spectrum, n)

    envelope = np.zeros(n)
    burst = max(1, int(rate * rng.uniform(0.05, 0.15)))
    start = 0
    while start < n:
        start += int(rate * rng.uniform(0.02, 0.1))
        envelope[start:start + burst] = np.hanning(min(burst, max(0, n - start)))
        start += burst
    x *= envelope
    peak = np.max(np.abs(x))
    return 0.6 * x / peak if peak > 0 else x


def render_clip(label: Label, n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    return harmonic_tone(n, rate, rng) if label is Label.REAL else noise_bursts(n, rate, rng)


def generate_corpus(directory: str, n_files: int, seed: int = 0, duration: float = 1.0,
                    verbose: bool = False) -> List[str]:
    """Write `n_files` WAVs named "0001r.wav", "0002f.wav", ... (half of each class); returns their paths."""
    if n_files < 2:
        raise ParameterError(f"a corpus needs at least 2 files, got {n_files}")
    if duration <= 0:
        raise ParameterError(f"duration must be positive, got {duration}")
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise PathAccessError(f"cannot create {directory}: {e}") from e

    rng = np.random.default_rng(seed)
    pool = [Label.REAL] * (n_files // 2) + [Label.FAKED] * (n_files - n_files // 2)
    labels = [pool[j] for j in rng.permutation(n_files)]

    paths = []
    for i, label in enumerate(labels, start=1):
        rate = SYNTH_RATES[i % len(SYNTH_RATES)]
        fmt = SYNTH_FORMATS[(i // 2) % len(SYNTH_FORMATS)]
        x = render_clip(label, int(duration * rate), rate, rng)
        if i % 5 == 0:
            x = np.column_stack([x, x * rng.uniform(0.8, 1.0)])
        name = f"{i:04d}{label.value[0]}.wav"
        path = os.path.join(directory, name)
        atomic_write_bytes(path, encode_wav(x, rate, fmt))
        paths.append(path)
        if verbose:
            print(f"   [dim]{name}: {label.value}, {rate} Hz {fmt}, {1 if x.ndim == 1 else x.shape[1]} ch[/dim]")

    if verbose:
        print(f"[green]✅ Wrote {len(paths)} clips to[/green] {directory}")
    return paths
