from __future__ import annotations
from typing import Any, Dict, List, Mapping, Tuple, Union
import json, os, tempfile

from .errors import PathAccessError

PathLike = Union[str, "os.PathLike[str]"]


def load_json(path: PathLike) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def dump_json(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def check_output_path(path: PathLike) -> None:
    """Fail early when `path` cannot be created: missing parent or not writable."""
    target = os.path.abspath(os.fspath(path))
    parent = os.path.dirname(target)
    if os.path.isdir(target):
        raise PathAccessError(f"output path is a directory: {path}")
    if not os.path.isdir(parent):
        raise PathAccessError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise PathAccessError(f"output directory is not writable: {parent}")


def _stage(target: str, data: bytes) -> str:
    parent = os.path.dirname(os.path.abspath(target))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=parent)
    except OSError as e:
        raise PathAccessError(f"cannot write {target}: {e}") from e
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
    except OSError as e:
        os.unlink(tmp)
        raise PathAccessError(f"cannot write {target}: {e}") from e
    return tmp


def atomic_write_group(files: Mapping[PathLike, Union[str, bytes]]) -> None:
    """Stage every file as a temp beside its target, then rename them all.

    On failure no temp file survives and targets already renamed by this call
    are removed again, so the group is never left half written.
    """
    staged: List[Tuple[str, str]] = []
    committed: List[str] = []
    try:
        for path, data in files.items():
            target = os.fspath(path)
            payload = data.encode("utf-8") if isinstance(data, str) else data
            staged.append((_stage(target, payload), target))
        while staged:
            tmp, target = staged[0]
            try:
                os.replace(tmp, target)
            except OSError as e:
                for done in committed:
                    os.unlink(done)
                raise PathAccessError(f"cannot write {target}: {e}") from e
            committed.append(target)
            staged.pop(0)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """Write to a temp file beside `path` and rename it into place."""
    atomic_write_group({path: data})


def atomic_write_text(path: PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def save_json(path: PathLike, obj: Dict[str, Any]) -> None:
    atomic_write_text(path, dump_json(obj))
