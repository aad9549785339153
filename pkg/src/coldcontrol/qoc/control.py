"""Time-discretized control fields."""
from __future__ import annotations

import numbers

import numpy as np

from ..core import TimeGrid, n_steps_for
from ..errors import InvalidArgument


class ControlField:
    """One or more real control series sampled at ``t_i = i * dt``.

    ``values`` has shape ``(n_steps, n_fields)``.  Arithmetic with scalars,
    other fields and numpy ufuncs returns new fields, so guesses can be
    composed like ``0.55 * np.sin(np.pi / T * ts)``.
    """

    __array_priority__ = 100

    def __init__(self, values, dt: float):
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 2:
            raise InvalidArgument("a control needs at least two time steps")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("control values must be finite")
        if dt <= 0:
            raise InvalidArgument("dt must be positive")
        self.values = v
        self.dt = float(dt)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_fields(self) -> int:
        return self.values.shape[1]

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.dt, self.n_steps, (self.n_steps - 1) * self.dt)

    @property
    def duration(self) -> float:
        return (self.n_steps - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    def get(self, i: int) -> np.ndarray:
        return self.values[i].copy()

    def front(self) -> np.ndarray:
        return self.get(0)

    def back(self) -> np.ndarray:
        return self.get(-1)

    def field(self, f: int = 0) -> np.ndarray:
        return self.values[:, f].copy()

    def with_values(self, values) -> "ControlField":
        return ControlField(np.reshape(values, self.values.shape), self.dt)

    def copy(self) -> "ControlField":
        return ControlField(self.values.copy(), self.dt)

    def __len__(self):
        return self.n_steps

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def _operand(self, other):
        if isinstance(other, ControlField):
            if other.values.shape != self.values.shape:
                raise InvalidArgument("control fields have different shapes")
            return other.values
        if isinstance(other, numbers.Real):
            return other
        other = np.asarray(other, dtype=float)
        return other if other.shape != (self.n_steps,) else other[:, None]

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        args = [x.values if isinstance(x, ControlField) else x for x in inputs]
        return ControlField(ufunc(*args), self.dt)

    def __add__(self, other):
        return ControlField(self.values + self._operand(other), self.dt)

    __radd__ = __add__

    def __sub__(self, other):
        return ControlField(self.values - self._operand(other), self.dt)

    def __rsub__(self, other):
        return ControlField(self._operand(other) - self.values, self.dt)

    def __mul__(self, other):
        return ControlField(self.values * self._operand(other), self.dt)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ControlField(self.values / self._operand(other), self.dt)

    def __neg__(self):
        return ControlField(-self.values, self.dt)

    def __repr__(self):
        return f"ControlField(n_steps={self.n_steps}, n_fields={self.n_fields}, dt={self.dt})"


def make_time_control(n_steps: int, dt: float) -> ControlField:
    """Single field holding the sample times ``0, dt, ..., (n_steps-1) dt``."""
    if int(n_steps) != n_steps or n_steps < 2:
        raise InvalidArgument("n_steps must be an integer >= 2")
    if dt <= 0:
        raise InvalidArgument("dt must be positive")
    return ControlField(np.arange(int(n_steps)) * float(dt), dt)


def time_control_for(duration: float, dt: float) -> ControlField:
    return make_time_control(n_steps_for(duration, dt), dt)


def stack_fields(*fields: ControlField) -> ControlField:
    dts = {f.dt for f in fields}
    if len(dts) != 1:
        raise InvalidArgument("fields use different time steps")
    return ControlField(np.hstack([f.values for f in fields]), fields[0].dt)
