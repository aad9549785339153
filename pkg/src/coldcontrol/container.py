"""Named numeric series with a deterministic JSON representation."""
from __future__ import annotations

import json
import math
import os
from collections import OrderedDict

import numpy as np

from .errors import InvalidArgument

FORMAT_VERSION = 1
COMPLEX_KEYS = "complex_keys"


def _is_complex(value) -> bool:
    if isinstance(value, complex):
        return True
    if isinstance(value, np.ndarray):
        return np.iscomplexobj(value)
    if isinstance(value, (list, tuple)):
        return any(_is_complex(v) for v in value)
    return False


def _number(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    return text


def _emit(value) -> str:
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _number(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return f"[{_number(value.real)},{_number(value.imag)}]"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(f"{json.dumps(str(k))}:{_emit(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_emit(v) for v in value) + "]"
    raise InvalidArgument(f"cannot serialize {type(value).__name__}")


def _decomplex(value):
    """Turn trailing ``[re, im]`` pairs back into complex numbers."""
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, list):
        return [_decomplex(v) for v in value]
    return value


class DataContainer:
    """Ordered map from names to scalars, strings, arrays or appendable series."""

    def __init__(self):
        self._data: OrderedDict = OrderedDict()

    def __contains__(self, key):
        return key in self._data

    def __getitem__(self, key):
        return self._data[key]

    def __setitem__(self, key, value):
        if not isinstance(key, str):
            raise InvalidArgument("container keys must be strings")
        if key in (COMPLEX_KEYS, "format_version"):
            raise InvalidArgument(f"{key!r} is reserved")
        self._data[key] = np.array(value) if isinstance(value, np.ndarray) else value

    def __len__(self):
        return len(self._data)

    def keys(self):
        return self._data.keys()

    def items(self):
        return self._data.items()

    def append(self, key: str, value) -> None:
        """Append one element to the series ``key``; all elements share one shape."""
        item = np.asarray(value)
        series = self._data.setdefault(key, [])
        if not isinstance(series, list):
            raise InvalidArgument(f"{key!r} is not an appendable series")
        if series and np.shape(series[0]) != item.shape:
            raise InvalidArgument(f"series {key!r} holds elements of shape {np.shape(series[0])}, got {item.shape}")
        series.append(item.item() if item.ndim == 0 else item.copy())

    def to_json(self) -> str:
        if not self._data:
            return "{}\n"
        payload = dict(self._data)
        complex_keys = sorted(k for k, v in self._data.items() if _is_complex(v))
        payload[COMPLEX_KEYS] = complex_keys
        payload["format_version"] = FORMAT_VERSION
        lines = [f"  {json.dumps(k)}: {_emit(payload[k])}" for k in sorted(payload)]
        return "{\n" + ",\n".join(lines) + "\n}\n"

    @classmethod
    def from_json(cls, text: str) -> "DataContainer":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise InvalidArgument("result file must hold a JSON object")
        complex_keys = set(raw.pop(COMPLEX_KEYS, []))
        raw.pop("format_version", None)
        dc = cls()
        for k in sorted(raw):
            v = raw[k]
            if k in complex_keys:
                v = _decomplex(v)
            if isinstance(v, list):
                try:
                    arr = np.array(v)
                    if arr.dtype != object:
                        v = arr
                except ValueError:
                    pass
            dc._data[k] = v
        return dc


def save_container(dc: DataContainer, path) -> None:
    """Write ``dc`` as JSON; ``OSError`` is re-raised with the path in its message."""
    path = os.fspath(path)
    if not path.endswith(".json"):
        raise InvalidArgument(f"result files must end in .json: {path}")
    text = dc.to_json()
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def load_container(path) -> DataContainer:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc
    return DataContainer.from_json(text)
