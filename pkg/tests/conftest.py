import struct

import numpy as np
import pytest

from mimic_audit.audio_io import AudioClip, encode_wav
from mimic_audit.dataset import DatasetManifest, LabeledSample
from mimic_audit.features import FeatureVector
from mimic_audit.schema import N_FEATURES, Label


def riff(fmt_body: bytes, payload: bytes, extra: bytes = b"") -> bytes:
    """Assemble a WAVE file from a raw fmt body and data payload; `extra` chunks go before data."""
    chunks = b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body + extra
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def pcm16_fmt(channels: int = 1, rate: int = 22050) -> bytes:
    return struct.pack("<HHIIHH", 1, channels, rate, rate * 2 * channels, 2 * channels, 16)


def sine(freq: float, seconds: float = 1.0, rate: int = 22050, amp: float = 0.5, phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(seconds * rate)) / rate
    return amp * np.sin(2.0 * np.pi * freq * t + phase)


def gaussian_features(n: int, seed: int = 0, offset: float = 3.0):
    """Two 26-dim unit-variance clusters at +/- offset along the diagonal direction; y = 1 for faked."""
    rng = np.random.default_rng(seed)
    direction = np.ones(N_FEATURES) / np.sqrt(N_FEATURES)
    y = np.arange(n) % 2
    x = rng.standard_normal((n, N_FEATURES)) + np.where(y[:, None] == 1, offset, -offset) * direction
    return x, y


def feature_manifest(x: np.ndarray, y: np.ndarray) -> DatasetManifest:
    samples = []
    for i, (row, cls) in enumerate(zip(x, y), start=1):
        label = Label.from_index(int(cls))
        samples.append(LabeledSample(i, label, f"{i:04d}{label.value[0]}.wav", FeatureVector(row)))
    return DatasetManifest(tuple(samples))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tone_clip():
    return AudioClip(sine(1000.0), 22050)


@pytest.fixture
def noise_clip(rng):
    return AudioClip(rng.uniform(-0.05, 0.05, 22050), 22050)


@pytest.fixture
def write_wav(tmp_path):
    def _write(name: str, samples: np.ndarray, rate: int = 22050, fmt: str = "pcm16"):
        path = tmp_path / name
        path.write_bytes(encode_wav(samples, rate, fmt))
        return path
    return _write
