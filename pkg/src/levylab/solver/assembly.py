"""Dense discretizations of the killed generator.

1D jump models use product integration against hat functions.  For the
generator ``Lf(x) = int_0^inf (f(x+y) + f(x-y) - 2 f(x)) nu(y) dy``:

* on ``(0, h)`` the second difference is replaced by ``y^2 / h^2`` times the
  grid second difference, which puts ``h^-2 int_0^h y^2 nu`` on the first
  neighbour;
* on ``(h, inf)`` ``f`` is interpolated linearly between nodes, giving weights
  ``W_k = int hat_k nu`` (the ``k = 1`` hat only over ``(h, 2h)``);
* the interpolation error on quadratics, ``int (y - kh)((k+1)h - y) nu / h^2``
  summed over segments, is taken off ``W_1`` so that the scheme is exact for
  quadratics.  Without it the consistency error is ``O(h^(2 - alpha))``,
  which only hurts for ``alpha > 1``; for small ``alpha`` the correction
  would break ``W_1 >= W_2`` and is left out.

Nodes outside the domain carry ``f = 0``, so their weight becomes killing.
The resulting matrix is the generator of a symmetric lattice walk with
lattice jump law ``W``.

2D jump models integrate ``nu`` over the square cell around each lattice
offset; the central cell contributes ``M / (2 h^2)`` to each of the four
neighbours, ``M = int_cell y_1^2 nu``.  The same neighbours also receive the
defect of the cell rule on quadratics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from levylab.errors import ParameterError, ResolutionError
from levylab.models import Kind, LevyModel, levy_density, radial_moment
from levylab.solver.grid import Grid1D, Grid2D

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _segment_integrals(model: LevyModel, lo: np.ndarray, hi: np.ndarray, p: int) -> np.ndarray:
    """``int_lo^hi y^p nu(y) dy`` per segment, Gauss-Legendre on each (0 < lo < hi)."""
    R = model.support_radius
    hi = np.minimum(hi, R)
    ok = hi > lo
    out = np.zeros(lo.shape)
    if not ok.any():
        return out
    l, u = lo[ok], hi[ok]
    mid, half = 0.5 * (l + u), 0.5 * (u - l)
    y = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = levy_density(model, y) * y ** p
    out[ok] = half * (vals @ _GL_W)
    return out


def _linear_pieces(model, lo, hi, anchor, h, rising):
    """``int_lo^hi w(y) nu`` with ``w`` linear, equal to 0 at ``anchor``, slope +-1/h."""
    m0 = _segment_integrals(model, lo, hi, 0)
    m1 = _segment_integrals(model, lo, hi, 1)
    if rising:
        return (m1 - anchor * m0) / h
    return (anchor * m0 - m1) / h


def lattice_weights(model: LevyModel, h: float, K: int) -> np.ndarray:
    """Lattice jump weights ``W_0..W_K`` (``W_0 = 0``) of the 1D scheme."""
    model._require_jumps()
    k = np.arange(1, K + 1, dtype=float)
    W = np.zeros(K + 1)
    # rising half of hat_k on ((k-1)h, kh), k >= 2
    rise = np.zeros(K)
    if K >= 2:
        kk = k[1:]
        rise[1:] = _linear_pieces(model, (kk - 1) * h, kk * h, (kk - 1) * h, h, True)
    fall = _linear_pieces(model, k * h, (k + 1) * h, (k + 1) * h, h, False)
    W[1:] = rise + fall
    W[1] += head_moment(model, h) / h ** 2 - _correction(model, h)
    return W


@lru_cache(maxsize=256)
def _correction(model: LevyModel, h: float) -> float:
    """The interpolation correction, or 0 when it would break ``W_1 >= W_2``.

    For small ``alpha`` the correction exceeds the head and the walk would
    lose its unimodal (and eventually nonnegative) weights; there the
    uncorrected scheme is already consistent to ``O(h^(2 - alpha))``.
    """
    c = interpolation_correction(model, h)
    k = np.array([1.0, 2.0])
    fall = _linear_pieces(model, k * h, (k + 1) * h, (k + 1) * h, h, False)
    rise2 = _linear_pieces(model, np.array([h]), np.array([2 * h]), np.array([h]), h, True)[0]
    w1 = fall[0] + head_moment(model, h) / h ** 2 - c
    w2 = fall[1] + rise2
    return c if w1 >= w2 else 0.0


def interpolation_correction(model: LevyModel, h: float, K: int = 4096) -> float:
    """``h^-2 int_h^inf (y - kh)((k+1)h - y) nu(y) dy`` with ``k = floor(y / h)``."""
    k = np.arange(1, K + 1, dtype=float)
    lo, hi = k * h, (k + 1) * h
    # (y - lo)(hi - y) = -y^2 + (lo + hi) y - lo hi
    m0 = _segment_integrals(model, lo, hi, 0)
    m1 = _segment_integrals(model, lo, hi, 1)
    m2 = _segment_integrals(model, lo, hi, 2)
    body = float(np.sum(-m2 + (lo + hi) * m1 - lo * hi * m0))
    # beyond K segments the bump averages to h^2 / 6
    tail = h ** 2 / 6.0 * radial_moment(model, (K + 1) * h)
    return (body + tail) / h ** 2


def head_moment(model: LevyModel, h: float) -> float:
    """``int_0^h y^2 nu(y) dy``."""
    return radial_moment(model, 0.0, h, 2.0)


def tail_weight(model: LevyModel, h: float, K: int) -> float:
    """``sum_{k >= K} W_k`` for ``K >= 2``."""
    if K < 2:
        raise ParameterError("tail weights are defined for K >= 2")
    ramp = _linear_pieces(model, np.array([(K - 1) * h]), np.array([K * h]),
                          (K - 1) * h, h, True)[0]
    return ramp + radial_moment(model, K * h)


def diagonal_rate(model: LevyModel, h: float) -> float:
    """Total lattice jump rate ``sum_{k != 0} W_|k|``."""
    return 2.0 * (head_moment(model, h) / h ** 2 + radial_moment(model, h)
                  - _correction(model, h))


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """Dense symmetric generator of the killed process on a grid.

    ``killing[i]`` is the jump rate from node ``i`` to the exterior, so that
    ``matrix.sum(axis=1) = -killing``.
    """

    model: LevyModel
    grid: Grid1D | Grid2D
    matrix: np.ndarray = field(repr=False)
    killing: np.ndarray = field(repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def sub(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return self.matrix[np.ix_(idx, idx)]


def _assemble_1d(model: LevyModel, grid: Grid1D) -> DiscretizedOperator:
    N, h = grid.N, grid.h
    W = lattice_weights(model, h, N + 1)
    total = diagonal_rate(model, h)
    if not np.all(np.isfinite(W)) or W[1] <= 0:
        raise ResolutionError("head quadrature failed on this grid")
    idx = np.arange(N)
    off = np.abs(idx[:, None] - idx[None, :])
    L = W[off]
    np.fill_diagonal(L, -total)
    # exterior mass: sum of weights to lattice nodes beyond either end
    left = idx + 1  # offset to the first node left of the domain
    right = N - idx
    kill = np.array([tail_weight(model, h, k) if k >= 2 else total / 2.0 for k in left]) \
        + np.array([tail_weight(model, h, k) if k >= 2 else total / 2.0 for k in right])
    L = 0.5 * (L + L.T)
    unimodal = bool(np.all(np.diff(W[1:]) <= 1e-14 * W[1]))
    meta = {"scheme": "hat product integration", "h": h, "total_rate": total,
            "head_moment": head_moment(model, h), "lattice_unimodal": unimodal,
            "interpolation_correction": _correction(model, h)}
    return DiscretizedOperator(model, grid, L, kill, W, meta)


def _assemble_brownian_1d(model: LevyModel, grid: Grid1D) -> DiscretizedOperator:
    N, h = grid.N, grid.h
    c = model.scale / h ** 2
    L = np.zeros((N, N))
    i = np.arange(N)
    L[i, i] = -2.0 * c
    L[i[:-1], i[:-1] + 1] = c
    L[i[1:], i[1:] - 1] = c
    # odd reflection through the wall: ghost value = -f(x_0)
    L[0, 0] = L[-1, -1] = -3.0 * c
    kill = np.zeros(N)
    kill[0] = kill[-1] = 2.0 * c
    meta = {"scheme": "three-point Laplacian, odd ghost nodes", "h": h}
    return DiscretizedOperator(model, grid, L, kill, None, meta)


# ---------------------------------------------------------------------------
# 2D


def _cell_integral(model: LevyModel, cx, cy, h, sub, moment=False):
    """``int nu`` (or ``int (y_1^2 - cx^2) nu``) over square cells centred at ``(cx, cy)``."""
    g, w = np.polynomial.legendre.leggauss(8)
    s = (np.arange(sub) + 0.5) / sub - 0.5
    off = (s[:, None] + g[None, :] / (2 * sub)).ravel() * h
    wt = np.tile(w, sub) / (2 * sub) * h
    X = cx[:, None, None] + off[None, :, None]
    Y = cy[:, None, None] + off[None, None, :]
    r = np.hypot(X, Y)
    vals = levy_density(model, r)
    if moment:
        vals = vals * (X ** 2 - cx[:, None, None] ** 2)
    return np.einsum("nij,i,j->n", vals, wt, wt)


def _radial_sector(model: LevyModel, h: float, p: float) -> float:
    """``int`` over the square ``[-h/2, h/2]^2`` minus the disc of radius h/2 of ``r^(p-1) nu dA``."""
    g, w = np.polynomial.legendre.leggauss(40)
    th = (g + 1.0) * math.pi / 8.0
    wt = w * math.pi / 8.0
    vals = [radial_moment(model, h / 2, h / (2 * math.cos(t)), p) for t in th]
    return 8.0 * float(np.dot(wt, vals))


def _quarter_cells(model: LevyModel, h: float, K: int, moment: bool) -> np.ndarray:
    """Cell integrals for offsets ``0 <= k1, k2 <= K`` (the centre cell left at 0)."""
    k1, k2 = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    out = np.zeros(k1.size)
    nz = (k1 + k2) > 0
    near = nz & (np.maximum(k1, k2) <= 3)
    # cells crossed by the truncation circle need a finer rule too
    R = model.support_radius
    rmin = np.hypot(np.maximum(k1 - 0.5, 0), np.maximum(k2 - 0.5, 0)) * h
    rmax = np.hypot(k1 + 0.5, k2 + 0.5) * h
    cut = nz & (rmin < R) & (rmax > R)
    fine = near | cut
    far = nz & ~fine & (rmin < R)
    out[fine] = _cell_integral(model, k1[fine] * h, k2[fine] * h, h, 6, moment)
    out[far] = _cell_integral(model, k1[far] * h, k2[far] * h, h, 1, moment)
    return out.reshape(K + 1, K + 1)


def _assemble_2d(model: LevyModel, grid: Grid2D) -> DiscretizedOperator:
    Nx, Ny, h = grid.Nx, grid.Ny, grid.h
    K = 2 * max(Nx, Ny) - 1  # every exterior offset within one domain width
    Wq = _quarter_cells(model, h, K, False)
    mult = np.full(Wq.shape, 4.0)
    mult[0, :] = 2.0
    mult[:, 0] = 2.0
    mult[0, 0] = 0.0
    # second moment of the central cell: 1/2 int |y|^2 nu over the cell
    M = 0.5 * (2.0 * math.pi * radial_moment(model, 0.0, h / 2, 3.0) + _radial_sector(model, h, 3.0))
    # quadratic exactness: the cell rule misses int_cell (y_1^2 - (k_1 h)^2) nu
    E = _quarter_cells(model, h, K, True)
    defect = 0.5 * float(np.sum(mult * (E + E.T)))
    defect += h ** 2 / 12.0 * 2.0 * math.pi * radial_moment(model, (K + 0.5) * h, math.inf, 1.0)
    head = (M + defect) / (2.0 * h ** 2)
    Wq[1, 0] += head
    Wq[0, 1] += head
    outside = 2.0 * math.pi * radial_moment(model, h / 2, math.inf, 1.0) - _radial_sector(model, h, 1.0)
    window = float(np.sum(mult * Wq))
    beyond = max(outside + 4.0 * head - window, 0.0)
    total = window + beyond

    xi = np.arange(Nx)
    yj = np.arange(Ny)
    D1 = np.abs(xi[:, None] - xi[None, :])
    D2 = np.abs(yj[:, None] - yj[None, :])
    # L[(i,j),(k,l)] = Wq[|i-k|, |j-l|]
    L = Wq[D1[:, None, :, None], D2[None, :, None, :]].reshape(Nx * Ny, Nx * Ny)
    np.fill_diagonal(L, 0.0)
    kill = np.maximum(total - L.sum(axis=1), 0.0)
    np.fill_diagonal(L, -total)
    meta = {"scheme": "cell integration", "h": h, "total_rate": total, "head_moment": M,
            "quadratic_defect": defect}
    return DiscretizedOperator(model, grid, L, kill, None, meta)


def assemble_generator(model: LevyModel, grid: Grid1D | Grid2D) -> DiscretizedOperator:
    """Killed generator on ``grid`` with zero exterior condition."""
    if model.dimension != grid.dimension:
        raise ParameterError("model and grid dimensions differ")
    if model.kind is Kind.BROWNIAN:
        if grid.dimension != 1:
            raise ParameterError("the Brownian reference is only discretized in 1D")
        return _assemble_brownian_1d(model, grid)
    if grid.dimension == 1:
        return _assemble_1d(model, grid)
    return _assemble_2d(model, grid)
