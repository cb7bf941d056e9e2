"""Cell-centred grids on intervals and boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from levylab.domain import Domain
from levylab.errors import GridAlignmentError, ParameterError

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Nodes ``x_j = -a + (j + 1/2) h`` with ``h = 2a/N``."""

    a: float
    N: int

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError("half-width must be positive")
        if int(self.N) != self.N or self.N < 2:
            raise ParameterError("need at least two nodes")

    @classmethod
    def for_domain(cls, domain: Domain, N: int) -> "Grid1D":
        if domain.dimension != 1:
            raise ParameterError("Grid1D needs an interval")
        return cls(domain.a, int(N))

    @property
    def dimension(self) -> int:
        return 1

    @property
    def h(self) -> float:
        return 2.0 * self.a / self.N

    @property
    def size(self) -> int:
        return self.N

    @property
    def nodes(self) -> np.ndarray:
        return -self.a + (np.arange(self.N) + 0.5) * self.h

    @property
    def domain(self) -> Domain:
        return Domain(self.a)

    def node_index(self, x: float) -> int:
        """Index of the node at ``x``; raises if ``x`` is not a node."""
        k = (x + self.a) / self.h - 0.5
        j = int(round(k))
        if abs(k - j) > _ALIGN_TOL or not 0 <= j < self.N:
            raise GridAlignmentError(f"{x} is not a grid node")
        return j

    def nearest_index(self, x: float) -> int:
        return int(np.clip(np.round((x + self.a) / self.h - 0.5), 0, self.N - 1))

    def face_index(self, x: float) -> int:
        """``k`` with ``x = -a + k h``; raises if ``x`` is not a cell face."""
        k = (x + self.a) / self.h
        j = int(round(k))
        if abs(k - j) > _ALIGN_TOL:
            raise GridAlignmentError(f"{x} is not on a cell face (h = {self.h})")
        return j

    def profile_indices(self, count: int = 33) -> np.ndarray:
        """``count`` nodes spread evenly over the grid, including both ends."""
        k = np.arange(count)
        return np.round(k * (self.N - 1) / (count - 1)).astype(int)

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.a, self.N * factor)


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid of square cells on ``(-a, a) x (-b, b)``.

    Nodes are ordered with the second coordinate fastest:
    index ``i * Ny + j`` holds ``(x_i, y_j)``.
    """

    a: float
    b: float
    N: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ParameterError("half-widths must be positive")
        ny = self.N * self.b / self.a
        if abs(ny - round(ny)) > 1e-9 or round(ny) < 2:
            raise ParameterError("b / a * N must be an integer >= 2 for square cells")

    @classmethod
    def for_domain(cls, domain: Domain, N: int) -> "Grid2D":
        if domain.dimension != 2:
            raise ParameterError("Grid2D needs a box")
        return cls(domain.a, domain.b, int(N))

    @property
    def dimension(self) -> int:
        return 2

    @property
    def Nx(self) -> int:
        return self.N

    @property
    def Ny(self) -> int:
        return int(round(self.N * self.b / self.a))

    @property
    def h(self) -> float:
        return 2.0 * self.a / self.N

    @property
    def size(self) -> int:
        return self.Nx * self.Ny

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        h = self.h
        return (-self.a + (np.arange(self.Nx) + 0.5) * h,
                -self.b + (np.arange(self.Ny) + 0.5) * h)

    @property
    def nodes(self) -> np.ndarray:
        x, y = self.axes
        X, Y = np.meshgrid(x, y, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def domain(self) -> Domain:
        return Domain(self.a, self.b)

    def index(self, i: int, j: int) -> int:
        return i * self.Ny + j

    def interpolate(self, values: np.ndarray, points) -> np.ndarray:
        """Bilinear interpolation of a node vector at interior points."""
        from scipy.interpolate import RegularGridInterpolator

        x, y = self.axes
        f = RegularGridInterpolator((x, y), np.asarray(values).reshape(self.Nx, self.Ny),
                                    bounds_error=False, fill_value=None)
        return f(np.atleast_2d(points))
