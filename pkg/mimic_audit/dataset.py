from __future__ import annotations
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import csv, io, math, os, re

import numpy as np
import pandas as pd
from rich import print

from .config import SplitConfig
from .errors import (
    DuplicateIndexError,
    FeatureCsvError,
    InsufficientDataError,
    NamingConventionError,
    PathAccessError,
    StratificationError,
)
from .features import FeatureVector
from .io_utils import atomic_write_text
from .schema import CSV_COLUMNS, LABEL_CODES, N_FEATURES, Label, parse_label_token

# "0001f.wav": four-digit index, then r(eal) or f(aked).
CORPUS_NAME_RE = re.compile(r"^(?P<index>\d{4})(?P<code>[rf])")

STD_FLOOR = 1e-12


def parse_label(filename: str) -> Tuple[int, Label]:
    base = os.path.basename(filename)
    if len(base) < 5:
        raise NamingConventionError(f"{base!r}: name shorter than 5 characters")
    m = CORPUS_NAME_RE.match(base)
    if not m:
        if not base[:4].isdigit():
            raise NamingConventionError(f"{base!r}: first four characters must be digits")
        raise NamingConventionError(f"{base!r}: fifth character must be 'r' or 'f', got {base[4]!r}")
    return int(m.group("index")), LABEL_CODES[m.group("code")]


@dataclass(frozen=True)
class LabeledSample:
    index: int
    label: Label
    path: str
    features: Optional[FeatureVector] = None

    @property
    def filename(self) -> str:
        return os.path.basename(self.path)


@dataclass(frozen=True)
class DatasetManifest:
    samples: Tuple[LabeledSample, ...] = field(default_factory=tuple)

    def __post_init__(self):
        samples = tuple(sorted(self.samples, key=lambda s: s.index))
        seen: Dict[int, str] = {}
        for s in samples:
            if s.index in seen:
                raise DuplicateIndexError(f"index {s.index:04d} used by both {seen[s.index]} and {s.filename}")
            seen[s.index] = s.filename
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def counts(self) -> Dict[Label, int]:
        out = {label: 0 for label in Label}
        for s in self.samples:
            out[s.label] += 1
        return out

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label.class_index for s in self.samples], dtype=np.int64)

    def subset(self, positions: Iterable[int]) -> "DatasetManifest":
        return DatasetManifest(tuple(self.samples[int(i)] for i in positions))

    def with_features(self, vectors: Sequence[FeatureVector]) -> "DatasetManifest":
        if len(vectors) != len(self.samples):
            raise InsufficientDataError(f"{len(vectors)} feature vectors for {len(self.samples)} samples")
        return DatasetManifest(tuple(replace(s, features=v) for s, v in zip(self.samples, vectors)))


def build_manifest(directory: str, verbose: bool = False) -> DatasetManifest:
    """One LabeledSample per .wav file in `directory`, ordered by index."""
    try:
        names = sorted(os.listdir(directory))
    except OSError as e:
        raise PathAccessError(f"cannot read directory {directory}: {e}") from e

    wavs = [n for n in names if n.lower().endswith(".wav") and os.path.isfile(os.path.join(directory, n))]
    if verbose:
        print(f"[blue]🔍 Scanning {len(wavs)} WAV files in[/blue] {directory}")

    samples = []
    for name in wavs:
        index, label = parse_label(name)
        samples.append(LabeledSample(index, label, os.path.join(directory, name)))
        if verbose:
            print(f"   [dim]{name} → {index:04d} {label.value}[/dim]")

    manifest = DatasetManifest(tuple(samples))
    if verbose:
        counts = manifest.counts
        print(f"[green]✅ {len(manifest)} samples:[/green] {counts[Label.REAL]} real, {counts[Label.FAKED]} faked")
    return manifest


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_holdout(labels: Sequence[int], fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split positions into (keep, holdout), stratified by label.

    The holdout has round(fraction * n) members overall; per-class quotas are
    proportional, with leftover seats going to the largest fractional parts.
    """
    y = np.asarray(labels, dtype=np.int64)
    classes = sorted(set(y.tolist()))
    if len(classes) < 2:
        raise StratificationError(f"stratified split needs both labels, found {len(classes)}")
    if not 0.0 < fraction < 1.0:
        raise StratificationError(f"fraction must lie in (0, 1), got {fraction}")

    n_hold = _round_half_up(fraction * y.size)
    sizes = {c: int(np.count_nonzero(y == c)) for c in classes}
    exact = {c: fraction * sizes[c] for c in classes}
    quota = {c: int(math.floor(exact[c])) for c in classes}
    by_remainder = sorted(classes, key=lambda c: (-(exact[c] - quota[c]), c))
    for c in by_remainder[: max(0, n_hold - sum(quota.values()))]:
        quota[c] += 1

    rng = np.random.default_rng(seed)
    holdout: List[int] = []
    for c in classes:
        members = rng.permutation(np.flatnonzero(y == c))
        holdout.extend(members[: min(quota[c], sizes[c])].tolist())

    hold = np.array(sorted(holdout), dtype=np.int64)
    keep = np.setdiff1d(np.arange(y.size), hold)
    return keep, hold


def split(manifest: DatasetManifest, cfg: Optional[SplitConfig] = None) -> Tuple[DatasetManifest, DatasetManifest]:
    cfg = cfg or SplitConfig()
    keep, hold = stratified_holdout(manifest.labels, cfg.test_fraction, cfg.seed)
    return manifest.subset(keep), manifest.subset(hold)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        std = np.maximum(np.array(self.std, dtype=np.float64).reshape(-1), STD_FLOOR)
        if mean.shape != std.shape:
            raise InsufficientDataError(f"scaler mean/std lengths differ: {mean.size} vs {std.size}")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return self.mean + self.std * np.asarray(z, dtype=np.float64)

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: Dict[str, Sequence[float]]) -> "Scaler":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


FeatureRows = Union[Sequence[FeatureVector], np.ndarray]


def _as_matrix(rows: FeatureRows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        return np.atleast_2d(rows.astype(np.float64))
    return np.array([r.values if isinstance(r, FeatureVector) else r for r in rows], dtype=np.float64).reshape(len(rows), -1)


def fit_scaler(train_features: FeatureRows) -> Scaler:
    """Per-dimension mean and population standard deviation (floored at 1e-12)."""
    x = _as_matrix(train_features)
    if x.shape[0] < 2:
        raise InsufficientDataError(f"scaler needs at least 2 training vectors, got {x.shape[0]}")
    return Scaler(x.mean(axis=0), x.std(axis=0, ddof=0))


def apply_scaler(scaler: Scaler, v: Union[FeatureVector, np.ndarray]) -> np.ndarray:
    values = v.values if isinstance(v, FeatureVector) else v
    return scaler.transform(values)


def manifest_arrays(manifest: DatasetManifest) -> Tuple[np.ndarray, np.ndarray]:
    """(X [n x 26], y [n]) with y = 1 for faked."""
    missing = [s.filename for s in manifest if s.features is None]
    if missing:
        raise InsufficientDataError(f"{len(missing)} samples lack features, e.g. {missing[0]}")
    if not len(manifest):
        return np.zeros((0, N_FEATURES)), np.zeros(0, dtype=np.int64)
    x = np.stack([s.features.values for s in manifest])
    return x, manifest.labels


def render_feature_csv(manifest: DatasetManifest) -> str:
    missing = [s.filename for s in manifest if s.features is None]
    if missing:
        raise InsufficientDataError(f"cannot write features: {missing[0]} has none")
    rows = [[s.filename, *s.features.values.tolist(), s.label.value] for s in manifest]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def write_feature_csv(manifest: DatasetManifest, path: str) -> None:
    atomic_write_text(path, render_feature_csv(manifest))


_LINE_RE = re.compile(r"line (\d+)")


def read_feature_csv(path: str) -> DatasetManifest:
    """Parse a feature cache written by `write_feature_csv`; errors name the file row (header = 1)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise PathAccessError(f"cannot read {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise FeatureCsvError(f"{path} is not UTF-8 text") from e
    if not text.strip():
        raise FeatureCsvError(f"{path} is empty (missing header)", row=1)

    try:
        table = pd.read_csv(io.StringIO(text), header=None, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        m = _LINE_RE.search(str(e))
        raise FeatureCsvError(f"column count mismatch ({e})", row=int(m.group(1)) if m else None) from e

    # pandas pads short rows with empty cells; keep the raw field counts.
    widths = [len(fields) for fields in csv.reader(io.StringIO(text)) if fields]
    header = [str(h).strip() for h in table.iloc[0].tolist()]
    if header != CSV_COLUMNS:
        raise FeatureCsvError(
            f"header has {len(header)} columns, expected {len(CSV_COLUMNS)} "
            f"({CSV_COLUMNS[0]}, {N_FEATURES} features, {CSV_COLUMNS[-1]})",
            row=1,
        )

    samples = []
    for pos in range(1, len(table)):
        row_no = pos + 1
        cells = table.iloc[pos].tolist()
        width = widths[pos] if pos < len(widths) else len(cells)
        if width != len(CSV_COLUMNS) or any(pd.isna(c) for c in cells):
            raise FeatureCsvError(f"expected {len(CSV_COLUMNS)} columns, got {width}", row=row_no)
        filename, label_cell = cells[0], cells[-1]
        try:
            label = parse_label_token(label_cell)
        except ValueError as e:
            raise FeatureCsvError(f"unknown label {label_cell!r}", row=row_no) from e
        try:
            values = [float(c) for c in cells[1:-1]]
        except ValueError as e:
            raise FeatureCsvError(f"non-numeric feature cell ({e})", row=row_no) from e
        try:
            index, named = parse_label(filename)
            vector = FeatureVector(np.asarray(values))
        except (NamingConventionError, ValueError) as e:
            raise FeatureCsvError(str(e), row=row_no) from e
        if named != label:
            raise FeatureCsvError(f"{filename} is named {named.value} but labelled {label.value}", row=row_no)
        samples.append(LabeledSample(index, label, filename, vector))

    try:
        return DatasetManifest(tuple(samples))
    except DuplicateIndexError as e:
        raise FeatureCsvError(str(e)) from e
