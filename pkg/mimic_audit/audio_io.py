"""WAV ingestion: RIFF/WAVE decoding, band-limited resampling, duration cap.

Every clip that enters feature extraction goes through `load_clip`, which
brings it to 22050 Hz mono and at most 20 seconds.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Literal, Optional, Tuple
import math, struct

import numpy as np

from .errors import ParameterError, TruncatedWavError, UnsupportedFormatError, WavFormatError
from .schema import ANALYSIS_RATE, MAX_SECONDS

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
# Sub-format GUID tail {XXXXXXXX-0000-0010-8000-00AA00389B71}, little endian.
_GUID_TAIL = b"\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"

PCM16_SCALE = 32768.0

KAISER_BETA = 8.6
TAPS_PER_PHASE = 64
ROLLOFF = 0.95
_RESAMPLE_BLOCK = 8192

SampleFormat = Literal["pcm16", "float32"]


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    source_path: str = ""

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ParameterError(f"clip samples must be one-dimensional, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("clip samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ParameterError("clip samples must lie within [-1, 1]")
        if int(self.sample_rate) <= 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class _FmtChunk:
    format_tag: int
    channels: int
    sample_rate: int
    block_align: int
    bits_per_sample: int


def _parse_fmt(body: bytes) -> _FmtChunk:
    if len(body) < 16:
        raise WavFormatError(f"fmt chunk too short ({len(body)} bytes)")
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise WavFormatError("extensible fmt chunk too short")
        guid = body[24:40]
        if not guid.endswith(_GUID_TAIL):
            raise UnsupportedFormatError("extensible sub-format is not PCM or IEEE float")
        tag = struct.unpack("<I", guid[:4])[0]
    if tag not in (WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedFormatError(f"unsupported WAV codec tag 0x{tag:04x}")
    if (tag, bits) not in ((WAVE_FORMAT_PCM, 16), (WAVE_FORMAT_IEEE_FLOAT, 32)):
        kind = "PCM" if tag == WAVE_FORMAT_PCM else "float"
        raise UnsupportedFormatError(f"unsupported {kind} bit depth {bits}")
    if channels not in (1, 2):
        raise UnsupportedFormatError(f"unsupported channel count {channels}")
    if rate == 0:
        raise WavFormatError("sample rate is zero")
    if block_align != channels * bits // 8:
        raise WavFormatError(f"block_align {block_align} inconsistent with {channels}ch/{bits}bit")
    return _FmtChunk(tag, channels, rate, block_align, bits)


def _find_chunks(data: bytes) -> Tuple[_FmtChunk, bytes]:
    fmt: Optional[_FmtChunk] = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        start = pos + 8
        if chunk_id == b"fmt ":
            if start + size > len(data):
                raise WavFormatError("fmt chunk runs past end of file")
            fmt = _parse_fmt(data[start:start + size])
        elif chunk_id == b"data":
            if fmt is None:
                raise WavFormatError("data chunk precedes fmt chunk")
            if start + size > len(data):
                raise TruncatedWavError(
                    f"data chunk declares {size} bytes but only {len(data) - start} remain"
                )
            return fmt, data[start:start + size]
        # Odd-sized chunks carry one pad byte.
        pos = start + size + (size & 1)
    if fmt is None:
        raise WavFormatError("no fmt chunk found")
    raise WavFormatError("no data chunk found")


def decode_wav(data: bytes, source_path: str = "") -> AudioClip:
    """Decode a RIFF/WAVE byte string (PCM16 or float32, mono or stereo) to a mono clip."""
    data = bytes(data)
    if len(data) < 12:
        raise WavFormatError(f"file too short to be WAV ({len(data)} bytes)")
    if data[:4] != b"RIFF":
        raise WavFormatError(f"not a RIFF file (magic {data[:4]!r})")
    if data[8:12] != b"WAVE":
        raise WavFormatError(f"RIFF form type is {data[8:12]!r}, expected b'WAVE'")

    fmt, payload = _find_chunks(data)
    if len(payload) % fmt.block_align:
        raise TruncatedWavError(
            f"data chunk length {len(payload)} is not a multiple of block size {fmt.block_align}"
        )

    if fmt.format_tag == WAVE_FORMAT_PCM:
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / PCM16_SCALE
    else:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise WavFormatError("float WAV contains non-finite samples")
        samples = np.clip(samples, -1.0, 1.0)

    if fmt.channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    return AudioClip(samples, fmt.sample_rate, source_path)


def encode_wav(samples: np.ndarray, sample_rate: int, sample_format: SampleFormat = "pcm16") -> bytes:
    """Render samples ((frames,) or (frames, channels), floats in [-1, 1]) as a WAV file."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] not in (1, 2):
        raise ParameterError(f"expected (frames,) or (frames, 1|2) samples, got shape {x.shape}")
    channels = x.shape[1]

    if sample_format == "pcm16":
        tag, bits = WAVE_FORMAT_PCM, 16
        ints = np.clip(np.round(x * PCM16_SCALE), -32768, 32767).astype("<i2")
        payload = ints.tobytes()
    elif sample_format == "float32":
        tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
        payload = np.clip(x, -1.0, 1.0).astype("<f4").tobytes()
    else:
        raise ParameterError(f"unknown sample format {sample_format!r}")

    block_align = channels * bits // 8
    fmt_body = struct.pack("<HHIIHH", tag, channels, int(sample_rate), int(sample_rate) * block_align, block_align, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def _kaiser(u: np.ndarray, beta: float) -> np.ndarray:
    inside = np.abs(u) < 1.0
    arg = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    return np.where(inside, np.i0(beta * arg) / np.i0(beta), 0.0)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Kaiser-windowed sinc interpolation to `target_rate`.

    The kernel spans TAPS_PER_PHASE samples of the lower of the two rates and
    its cutoff sits just below the lower Nyquist frequency. Each output sample's
    weights are normalised to unit sum, so DC passes exactly.
    """
    if target_rate <= 0:
        raise ParameterError(f"target_rate must be positive, got {target_rate}")
    src_rate = clip.sample_rate
    if target_rate == src_rate:
        return clip

    x = clip.samples
    n_out = len(x) * int(target_rate) // src_rate
    if n_out == 0:
        return AudioClip(np.zeros(0), target_rate, clip.source_path)

    ratio = target_rate / src_rate
    scale = min(1.0, ratio)
    cutoff = ROLLOFF * scale
    half_width = (TAPS_PER_PHASE // 2) / scale
    reach = int(math.ceil(half_width))
    offsets = np.arange(-reach + 1, reach + 1)

    out = np.empty(n_out)
    for start in range(0, n_out, _RESAMPLE_BLOCK):
        n = np.arange(start, min(start + _RESAMPLE_BLOCK, n_out))
        t = n * (src_rate / target_rate)
        base = np.floor(t).astype(np.int64)
        idx = base[:, None] + offsets[None, :]
        d = t[:, None] - idx
        w = cutoff * np.sinc(cutoff * d) * _kaiser(d / half_width, KAISER_BETA)
        w /= w.sum(axis=1, keepdims=True)
        valid = (idx >= 0) & (idx < len(x))
        taps = np.where(valid, x[np.clip(idx, 0, len(x) - 1)], 0.0)
        out[start:start + n.size] = np.sum(w * taps, axis=1)

    return AudioClip(np.clip(out, -1.0, 1.0), target_rate, clip.source_path)


def clip_duration(clip: AudioClip, max_seconds: float = MAX_SECONDS) -> AudioClip:
    if max_seconds <= 0:
        raise ParameterError(f"max_seconds must be positive, got {max_seconds}")
    limit = int(math.floor(max_seconds * clip.sample_rate))
    if len(clip) <= limit:
        return clip
    return AudioClip(clip.samples[:limit], clip.sample_rate, clip.source_path)


def read_wav(path: str) -> AudioClip:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise WavFormatError(f"cannot read {path}: {e}") from e
    return decode_wav(data, source_path=str(path))


def load_clip(path: str, target_rate: int = ANALYSIS_RATE, max_seconds: float = MAX_SECONDS) -> AudioClip:
    """Read, cap, resample to the analysis rate and cap again."""
    clip = clip_duration(read_wav(path), max_seconds)
    return clip_duration(resample(clip, target_rate), max_seconds)
