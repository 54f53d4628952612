from __future__ import annotations
from enum import Enum
from typing import Dict, List

# Bump whenever FEATURE_NAMES or the model document layout changes.
SCHEMA_VERSION = 1

ANALYSIS_RATE = 22050
MAX_SECONDS = 20.0
N_MFCC = 20
N_MELS = 128

FEATURE_NAMES: List[str] = [
    "zcr",
    "rmse",
    "centroid",
    "bandwidth",
    "rolloff",
    "chroma",
] + [f"mfcc{i:02d}" for i in range(1, N_MFCC + 1)]

N_FEATURES = len(FEATURE_NAMES)

CSV_COLUMNS: List[str] = ["filename"] + FEATURE_NAMES + ["label"]


class Label(str, Enum):
    REAL = "real"
    FAKED = "faked"

    @property
    def class_index(self) -> int:
        return CLASS_INDEX[self]

    @classmethod
    def from_index(cls, index: int) -> "Label":
        return INDEX_CLASS[int(index)]


# Class 0 wins ties in predict; "faked" is the positive class everywhere.
CLASS_INDEX: Dict[Label, int] = {Label.REAL: 0, Label.FAKED: 1}
INDEX_CLASS: Dict[int, Label] = {v: k for k, v in CLASS_INDEX.items()}

# Fifth character of a corpus file name.
LABEL_CODES: Dict[str, Label] = {"r": Label.REAL, "f": Label.FAKED}


def normalize(s: str) -> str:
    return " ".join(s.strip().lower().replace("\n", " ").split())


def parse_label_token(token: str) -> Label:
    """Map a CSV label cell ("real"/"faked", any case or padding) to a Label."""
    return Label(normalize(token))
