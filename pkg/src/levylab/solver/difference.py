"""Reflection-difference kernels on a window ``U`` of an interval.

For ``x, y`` in ``U_+`` the difference ``p_U(s, x, y) - p_U(s, T x, y)`` is the
kernel of the odd part of the killed walk on ``U``, generated by

    L_odd[x, y] = L[x, y] - L[x, T y].

Off the diagonal ``L_odd`` is nonnegative whenever the lattice weights are
nonincreasing, so ``exp(s L_odd)`` is computed as an entrywise nonnegative
matrix.  With lattice weights standing in for ``nu`` the reflection identity

    psi_t(x) - psi_t(T x) = int_0^t sum_z f_s(x, z) psi_{t-s}(z) h ds

holds exactly for the discrete walk, so the residual of a numerical check
only measures the time quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg

from levylab.domain import Domain, Window
from levylab.errors import DomainError, GridAlignmentError, ParameterError
from levylab.models import LevyModel
from levylab.solver.assembly import lattice_weights
from levylab.solver.grid import Grid1D
from levylab.solver.semigroup import generator, positive_expm, semigroup, survival_pde


@dataclass(frozen=True, eq=False)
class WindowLattice:
    """Node bookkeeping for a face-aligned window ``U`` on a 1D grid."""

    grid: Grid1D
    window: Window
    first: int  # first node index inside U
    stop: int  # one past the last node inside U

    @classmethod
    def build(cls, grid: Grid1D, window: Window) -> "WindowLattice":
        if not window.within(grid.domain):
            raise DomainError("window must lie inside the domain")
        try:
            i_b = grid.face_index(window.left)
            i_c = grid.face_index(window.right)
        except GridAlignmentError as exc:
            raise GridAlignmentError(f"window ({window.left}, {window.right}) is not "
                                     f"aligned with cell faces: {exc}") from None
        if i_c - i_b < 2:
            raise GridAlignmentError("window must contain at least two nodes")
        return cls(grid, window, i_b, i_c)

    def reflect(self, k):
        """Reflected node index (also valid for lattice nodes outside the grid)."""
        return self.first + self.stop - 1 - np.asarray(k)

    @property
    def plus(self) -> np.ndarray:
        k = np.arange(self.first, self.stop)
        return k[k > self.reflect(k)]

    @property
    def minus(self) -> np.ndarray:
        k = np.arange(self.first, self.stop)
        return k[k < self.reflect(k)]

    def lattice_index(self, z) -> np.ndarray:
        """Lattice index of points ``z`` (nodes of the grid extended beyond the domain)."""
        g = self.grid
        k = (np.asarray(z, dtype=float) + g.a) / g.h - 0.5
        j = np.round(k)
        if np.any(np.abs(k - j) > 1e-9):
            raise GridAlignmentError("exterior points must be lattice nodes")
        return j.astype(int)


@dataclass(eq=False)
class DifferenceSemigroup:
    """``exp(s L_odd)`` on ``U_+`` and the lattice weights needed around it."""

    model: LevyModel
    lattice: WindowLattice
    L_odd: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, model: LevyModel, grid: Grid1D, window: Window) -> "DifferenceSemigroup":
        lat = WindowLattice.build(grid, window)
        op = generator(model, grid)
        plus = lat.plus
        L = op.matrix
        L_odd = L[np.ix_(plus, plus)] - L[np.ix_(plus, lat.reflect(plus))]
        return cls(model, lat, 0.5 * (L_odd + L_odd.T))

    @property
    def spectrum(self):
        if not hasattr(self, "_spec"):
            self._spec = linalg.eigh(self.L_odd)
        return self._spec

    def kernel(self, s: float) -> np.ndarray:
        """``p_U(s, x, y) - p_U(s, T x, y)`` for ``x, y`` in ``U_+`` (times ``h``)."""
        if not s > 0:
            raise DomainError("s must be positive")
        return positive_expm(self.L_odd, s)

    def rows(self, s_values, row: int) -> np.ndarray:
        """Row ``row`` of ``exp(s L_odd)`` for each ``s`` (spectral, shape (Q, |U_+|))."""
        w, V = self.spectrum
        return (np.exp(np.outer(s_values, w)) * V[row]) @ V.T

    def weight_difference(self, z_index: np.ndarray) -> np.ndarray:
        """``(W_|y - z| - W_|T y - z|) / h`` for ``y`` in ``U_+`` and lattice nodes ``z``."""
        lat = self.lattice
        plus = lat.plus
        z_index = np.asarray(z_index)
        d1 = np.abs(plus[:, None] - z_index[None, :])
        d2 = np.abs(lat.reflect(plus)[:, None] - z_index[None, :])
        K = int(max(d1.max(initial=1), d2.max(initial=1)))
        W = _weights(self.model, lat.grid.h, K)
        return (W[d1] - W[d2]) / lat.grid.h


@lru_cache(maxsize=16)
def _weights(model: LevyModel, h: float, K: int) -> np.ndarray:
    return lattice_weights(model, h, K)


def _row_of(lat: WindowLattice, x: float) -> int | None:
    """Position of node ``x`` within ``U_+``; None when ``x`` is the midpoint node."""
    k = lat.grid.node_index(x)
    if k == int(lat.reflect(k)):
        return None
    hits = np.nonzero(lat.plus == k)[0]
    if hits.size == 0:
        raise DomainError(f"{x} is not in U_+")
    return int(hits[0])


def difference_kernel(model: LevyModel, domain: Domain, window: Window, x: float, s: float,
                      z, grid: Grid1D) -> np.ndarray:
    """Signed density ``f_s^U(x, z)`` at lattice nodes ``z`` outside ``U``.

    ``f = sum_{y in U_+} [p_U(s,x,y) - p_U(s,Tx,y)] [W(y - z) - W(T y - z)] / h``
    where ``W`` are the lattice jump weights, so ``W / h`` stands for ``nu``.
    """
    if domain.dimension != 1 or grid.a != domain.a:
        raise ParameterError("difference kernels need the interval grid of the domain")
    ds = DifferenceSemigroup.build(model, grid, window)
    lat = ds.lattice
    z = np.atleast_1d(np.asarray(z, dtype=float))
    zi = lat.lattice_index(z)
    if np.any((zi >= lat.first) & (zi < lat.stop)):
        raise DomainError("z must lie outside U")
    row = _row_of(lat, x)
    if row is None:
        return np.zeros(z.size)
    Krow = ds.kernel(s)[row]
    return Krow @ ds.weight_difference(zi)


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    residual: float
    term_left: float
    term_right: float
    panels: int
    N: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# two points per panel keeps the refinement study above roundoff
GL_ORDER = 2


def check_difference_identity(model: LevyModel, domain: Domain, window: Window, x: float,
                              t: float, grid: Grid1D, panels: int = 128,
                              order: int = GL_ORDER) -> IdentityCheck:
    """Both sides of the reflection identity and their absolute difference.

    The left side comes from :func:`survival_pde`; the right side integrates
    ``sum_z f_s(x, z) psi_{t-s}(z) h`` over ``s`` with composite Gauss-Legendre
    on ``panels`` equal panels.  ``term_left`` collects exterior points below
    ``l(U)`` (zero when ``l(U) = -a``) and ``term_right`` those above ``r(U)``.
    A start point between two nodes of ``U_+`` uses linear interpolation of
    both sides between them.
    """
    ds = DifferenceSemigroup.build(model, grid, window)
    lat = ds.lattice
    nodes = grid.nodes
    # a start point between nodes is handled by linear interpolation of both sides
    j = int(np.clip(np.searchsorted(nodes, x) - 1, 0, grid.N - 2))
    theta = (x - nodes[j]) / grid.h
    if abs(theta) < 1e-9 or abs(theta - 1.0) < 1e-9:
        picks = [(grid.node_index(x), 1.0)]
    else:
        if not 0.0 < theta < 1.0:
            raise DomainError(f"{x} lies outside the grid")
        picks = [(j, 1.0 - theta), (j + 1, theta)]
    parts = [_identity_at_node(model, domain, ds, k, t, grid, panels, order) for k, _ in picks]
    comb = [sum(wt * p[i] for (_, wt), p in zip(picks, parts)) for i in range(4)]
    lhs, rhs, tl, tr = comb
    return IdentityCheck(lhs, rhs, abs(lhs - rhs), tl, tr, panels, grid.N)


def _identity_at_node(model, domain, ds, k, t, grid, panels, order):
    lat = ds.lattice
    psi_t = survival_pde(model, domain, t, grid)
    lhs = float(psi_t[k] - psi_t[int(lat.reflect(k))])
    row = _row_of(lat, grid.nodes[k])
    if row is None or t == 0:
        return lhs, 0.0, 0.0, 0.0
    nodes = np.arange(grid.N)
    outside = nodes[(nodes < lat.first) | (nodes >= lat.stop)]
    wdiff = ds.weight_difference(outside)  # exterior of D has psi = 0
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, t, panels + 1)
    half = 0.5 * np.diff(edges)
    s = ((edges[:-1] + edges[1:]) / 2)[:, None] + half[:, None] * g[None, :]
    ws = (half[:, None] * w[None, :]).ravel()
    s = s.ravel()
    F = ds.rows(s, row) @ wdiff  # f_s(x, z) at every quadrature time
    lam, V = semigroup(model, grid).spectrum
    coef = V.T @ np.ones(grid.N)
    psi_rem = (np.exp(np.outer(t - s, lam)) * coef) @ V[outside].T  # psi_{t-s}(z)
    integrand = F * psi_rem * grid.h
    below = outside < lat.first
    term_left = float(ws @ integrand[:, below].sum(axis=1))
    term_right = float(ws @ integrand[:, ~below].sum(axis=1))
    return lhs, term_left + term_right, term_left, term_right
