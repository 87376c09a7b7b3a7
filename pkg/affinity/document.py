"""
JSON documents describing an IFS and a continuity scan.

An IFS document has exactly the shape::

    {"d": 2, "maps": [{"A": [[a11, a12], [a21, a22]], "t": [t1, t2]}, ...]}

with ``t`` optional (zeros). A scan document wraps one as
``{"base": {...}, "directions": [D_1, ..., D_m], "t_grid": [...]}`` with optional
``"s"`` and ``"n"``. Floats are written with the shortest round-trip repr, so
dumping and re-loading reproduces every entry bit for bit.
"""

import json
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import InputError
from .linalg import as_matrix
from .pressure import LinearTuple
from .selfaffine import AffineIFS

PathLike = Union[str, os.PathLike]


def _read_json(path: PathLike) -> Any:
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _check_keys(obj: Any, required: Sequence[str], optional: Sequence[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{what} must be a JSON object")
    missing = [key for key in required if key not in obj]
    extra = [key for key in obj if key not in required and key not in optional]
    if missing or extra:
        raise InputError(f"{what}: missing keys {missing}, unexpected keys {extra}")


def _number_array(value: Any, shape: Tuple[int, ...], what: str) -> np.ndarray:
    def numeric(x: Any) -> bool:
        if isinstance(x, list):
            return all(numeric(y) for y in x)
        return isinstance(x, (int, float)) and not isinstance(x, bool)

    if not numeric(value):
        raise InputError(f"{what} must be a nested array of numbers")
    try:
        array = np.array(value, dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{what} is ragged: {exc}") from exc
    if array.shape != shape:
        raise InputError(f"{what} has shape {array.shape}, expected {shape}")
    if not np.all(np.isfinite(array)):
        raise InputError(f"{what} has non-finite entries")
    return array


@dataclass(frozen=True, eq=False)
class IFSDocument:
    d: int
    matrices: Tuple[np.ndarray, ...]
    translations: Tuple[np.ndarray, ...]

    @classmethod
    def parse(cls, obj: Any) -> "IFSDocument":
        _check_keys(obj, ("d", "maps"), (), "IFS document")
        d = obj["d"]
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise InputError(f"d must be a positive integer, got {d!r}")
        maps = obj["maps"]
        if not isinstance(maps, list) or not maps:
            raise InputError("maps must be a non-empty array")
        matrices, translations = [], []
        for i, entry in enumerate(maps):
            _check_keys(entry, ("A",), ("t",), f"map {i}")
            A = _number_array(entry["A"], (d, d), f"map {i} A")
            t = _number_array(entry.get("t", [0.0] * d), (d,), f"map {i} t")
            matrices.append(as_matrix(A))
            translations.append(t)
        document = cls(d=d, matrices=tuple(matrices), translations=tuple(translations))
        document.linear()
        return document

    @classmethod
    def loads(cls, text: str) -> "IFSDocument":
        try:
            return cls.parse(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"not valid JSON: {exc}") from exc

    @classmethod
    def load(cls, path: PathLike) -> "IFSDocument":
        return cls.parse(_read_json(path))

    @classmethod
    def from_ifs(cls, ifs: AffineIFS) -> "IFSDocument":
        return cls(
            d=ifs.d,
            matrices=tuple(ifs.linear.matrices),
            translations=tuple(np.array(t) for t in ifs.translations),
        )

    @property
    def m(self) -> int:
        return len(self.matrices)

    def linear(self) -> LinearTuple:
        return LinearTuple(self.matrices)

    def ifs(self) -> AffineIFS:
        return AffineIFS(self.linear(), np.stack(self.translations))

    def to_json(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "maps": [
                {"A": A.tolist(), "t": t.tolist()}
                for A, t in zip(self.matrices, self.translations)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def dump(self, path: PathLike) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_json(), handle, indent=2)
            handle.write("\n")


@dataclass(frozen=True, eq=False)
class ScanSpec:
    """Straight-line family ``A_i(t) = A_i + t D_i`` over a grid of t values."""

    base: IFSDocument
    directions: np.ndarray
    t_grid: Tuple[float, ...]
    s: Optional[float] = None
    n: Optional[int] = None

    def __post_init__(self) -> None:
        shape = (self.base.m, self.base.d, self.base.d)
        D = np.array(self.directions, dtype=np.float64)
        if D.shape != shape or not np.all(np.isfinite(D)):
            raise InputError(f"directions must be finite with shape {shape}, got {D.shape}")
        grid = tuple(float(t) for t in self.t_grid)
        if not grid or not all(math.isfinite(t) for t in grid):
            raise InputError("t_grid must be a non-empty list of finite numbers")
        if self.s is not None:
            if isinstance(self.s, bool) or not isinstance(self.s, (int, float)):
                raise InputError(f"s must be a number, got {self.s!r}")
            if not (math.isfinite(self.s) and self.s >= 0.0):
                raise InputError(f"s must be finite and non-negative, got {self.s!r}")
        if self.n is not None and (
            isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1
        ):
            raise InputError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "directions", D)
        object.__setattr__(self, "t_grid", grid)
        self.check()

    @classmethod
    def parse(cls, obj: Any) -> "ScanSpec":
        _check_keys(obj, ("base", "directions", "t_grid"), ("s", "n"), "scan document")
        base = IFSDocument.parse(obj["base"])
        directions = _number_array(obj["directions"], (base.m, base.d, base.d), "directions")
        t_grid = obj["t_grid"]
        if not isinstance(t_grid, list):
            raise InputError("t_grid must be an array")
        return cls(
            base=base,
            directions=directions,
            t_grid=tuple(_number_array(t_grid, (len(t_grid),), "t_grid")),
            s=obj.get("s"),
            n=obj.get("n"),
        )

    @classmethod
    def load(cls, path: PathLike) -> "ScanSpec":
        return cls.parse(_read_json(path))

    def tuple_at(self, t: float) -> LinearTuple:
        try:
            return self.base.linear().perturbed(self.directions, t)
        except InputError as exc:
            raise InputError(f"perturbed tuple is singular at t = {t!r}: {exc}") from exc

    def check(self) -> None:
        for t in self.t_grid:
            self.tuple_at(t)

    def to_json(self) -> Dict[str, Any]:
        obj: Dict[str, Any] = {
            "base": self.base.to_json(),
            "directions": self.directions.tolist(),
            "t_grid": list(self.t_grid),
        }
        if self.s is not None:
            obj["s"] = self.s
        if self.n is not None:
            obj["n"] = self.n
        return obj


def rotation_generators(m: int) -> List[List[List[float]]]:
    """``[[0, -1], [1, 0]]`` for every map: the infinitesimal rotation."""
    return [[[0.0, -1.0], [1.0, 0.0]] for _ in range(m)]
