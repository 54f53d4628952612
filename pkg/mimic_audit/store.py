from __future__ import annotations
from typing import Any, Dict, List, Sequence
import json, os

import numpy as np
import pandas as pd

from .config import TrainConfig
from .dataset import Scaler
from .errors import ModelFileError, PathAccessError, SchemaVersionError
from .io_utils import atomic_write_text, dump_json, save_json
from .network import MlpModel, TrainHistory
from .schema import FEATURE_NAMES, SCHEMA_VERSION

CSV_FLOAT = "%.17g"


def model_to_dict(model: MlpModel) -> Dict[str, Any]:
    return {
        "schema_version": model.schema_version,
        "feature_names": list(FEATURE_NAMES),
        "layer_dims": list(model.layer_dims),
        "dropout_rate": model.dropout_rate,
        "seed": model.seed,
        "scaler": model.scaler.to_dict() if model.scaler is not None else None,
        "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(model.weights, model.biases)],
        "train_config": model.train_config.model_dump(mode="json") if model.train_config is not None else None,
    }


def model_from_dict(doc: Dict[str, Any]) -> MlpModel:
    if not isinstance(doc, dict):
        raise ModelFileError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"model schema_version {version!r} does not match supported version {SCHEMA_VERSION}")
    try:
        layers = doc["layers"]
        weights = tuple(np.asarray(layer["weight"], dtype=np.float64) for layer in layers)
        biases = tuple(np.asarray(layer["bias"], dtype=np.float64) for layer in layers)
        scaler = Scaler.from_dict(doc["scaler"]) if doc.get("scaler") is not None else None
        cfg = TrainConfig(**doc["train_config"]) if doc.get("train_config") is not None else None
        model = MlpModel(
            layer_dims=tuple(doc["layer_dims"]),
            weights=weights,
            biases=biases,
            dropout_rate=float(doc.get("dropout_rate", 0.5)),
            scaler=scaler,
            seed=int(doc.get("seed", 0)),
            train_config=cfg,
            schema_version=version,
        )
    except ModelFileError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"malformed model document: {e}") from e
    if scaler is not None and scaler.mean.size != model.layer_dims[0]:
        raise ModelFileError(f"scaler has {scaler.mean.size} dimensions, model expects {model.layer_dims[0]}")
    return model


def render_model(model: MlpModel) -> str:
    return dump_json(model_to_dict(model))


def save_model(model: MlpModel, path: str) -> None:
    atomic_write_text(path, render_model(model))


def load_model(path: str) -> MlpModel:
    if not os.path.exists(path):
        raise PathAccessError(f"model file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise PathAccessError(f"cannot read {path}: {e}") from e
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFileError(f"{path} is not a JSON model document: {e}") from e
    return model_from_dict(doc)


def _render_frame(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=CSV_FLOAT, lineterminator="\n")


def _write_frame(frame: pd.DataFrame, path: str) -> None:
    atomic_write_text(path, _render_frame(frame))


def render_history_csv(history: TrainHistory) -> str:
    return _render_frame(history.as_frame())


def write_history_csv(history: TrainHistory, path: str) -> None:
    atomic_write_text(path, render_history_csv(history))


def write_roc_csv(thresholds: Sequence[float], points: np.ndarray, path: str) -> None:
    """Rows of threshold,fpr,tpr; the (0,0) anchor carries threshold inf."""
    pts = np.asarray(points, dtype=np.float64)
    _write_frame(pd.DataFrame({"threshold": list(thresholds), "fpr": pts[:, 0], "tpr": pts[:, 1]}), path)


def write_predictions_csv(filenames: Sequence[str], labels: Sequence[str], predicted: Sequence[str],
                          confidences: Sequence[float], faked_scores: Sequence[float], path: str) -> None:
    frame = pd.DataFrame({
        "filename": list(filenames),
        "label": list(labels),
        "predicted": list(predicted),
        "confidence": list(confidences),
        "p_faked": list(faked_scores),
    })
    _write_frame(frame, path)


def write_report(report: Dict[str, Any], path: str) -> None:
    save_json(path, report)


__all__: List[str] = [
    "model_to_dict", "model_from_dict", "save_model", "load_model", "write_history_csv",
    "write_roc_csv", "write_predictions_csv", "write_report", "render_model", "render_history_csv",
]
