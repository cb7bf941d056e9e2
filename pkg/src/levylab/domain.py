"""Intervals, boxes and the reflection windows ``U = (l, r) x F`` inside them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from levylab.errors import DomainError, ParameterError


@dataclass(frozen=True)
class Domain:
    """``(-a, a)`` when ``b`` is None, otherwise the box ``(-a, a) x (-b, b)``."""

    a: float
    b: float | None = None

    def __post_init__(self):
        if not self.a > 0 or (self.b is not None and not self.b > 0):
            raise ParameterError("domain half-widths must be positive")

    @classmethod
    def interval(cls, a: float) -> "Domain":
        return cls(a)

    @classmethod
    def box(cls, a: float, b: float) -> "Domain":
        return cls(a, b)

    @property
    def dimension(self) -> int:
        return 1 if self.b is None else 2

    @property
    def half_widths(self) -> np.ndarray:
        return np.array([self.a] if self.b is None else [self.a, self.b])

    def contains(self, x) -> bool | np.ndarray:
        """Membership in the open domain; ``x`` has trailing axis of length d (or is scalar in 1D)."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1:
            if x.ndim and x.shape[-1] == 1:
                x = x[..., 0]
            return np.abs(x) < self.a
        return np.all(np.abs(x) < self.half_widths, axis=-1)

    def to_dict(self) -> dict:
        if self.b is None:
            return {"shape": "interval", "a": self.a}
        return {"shape": "box", "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, data: dict) -> "Domain":
        shape = data.get("shape", "interval")
        if shape == "interval":
            return cls(float(data["a"]))
        if shape == "box":
            return cls(float(data["a"]), float(data["b"]))
        raise ParameterError(f"unknown domain shape {shape!r}")


@dataclass(frozen=True)
class Window:
    """A window ``U = (left, right) x F`` in the first coordinate.

    ``T_U`` reflects the first coordinate through the midpoint; ``U_-`` and
    ``U_+`` are the halves on either side of it and ``H_-``/``H_+`` the
    corresponding half-spaces.
    """

    left: float
    right: float

    def __post_init__(self):
        if not self.left < self.right:
            raise ParameterError("window needs left < right")

    @classmethod
    def for_pair(cls, a: float, x_left: float, x_right: float) -> "Window":
        """The window with ``l(U) = -a`` reflecting ``x_right`` onto ``x_left``."""
        if not -a < x_left < x_right <= a:
            raise DomainError("need -a < x_left < x_right <= a")
        if x_left + x_right > 0:
            raise DomainError("the window reaches past a unless x_left + x_right <= 0")
        return cls(-a, a + x_left + x_right)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.left + self.right)

    def reflect(self, x):
        """``T_U(x) = x + 2 e1 (m(U) - x1)``."""
        x = np.array(x, dtype=float)
        if x.ndim and x.shape[-1] == 2:
            x[..., 0] = 2.0 * self.midpoint - x[..., 0]
            return x
        return 2.0 * self.midpoint - x

    def shifted(self, v: float) -> "Window":
        return Window(self.left + v, self.right + v)

    def in_plus(self, x1) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        return (x1 > self.midpoint) & (x1 < self.right)

    def in_minus(self, x1) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        return (x1 > self.left) & (x1 < self.midpoint)

    def positive_zone(self, z1) -> np.ndarray:
        """``H_+(U)`` minus the closure of ``U_+``: first coordinate beyond ``r(U)``."""
        return np.asarray(z1, dtype=float) > self.right

    def negative_zone(self, z1) -> np.ndarray:
        """``H_-(U)`` minus the closure of ``U_-``: first coordinate below ``l(U)``."""
        return np.asarray(z1, dtype=float) < self.left

    def within(self, domain: Domain) -> bool:
        return -domain.a <= self.left and self.right <= domain.a
