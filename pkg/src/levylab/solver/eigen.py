"""First Dirichlet eigenpair of the killed generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from levylab.domain import Domain
from levylab.errors import ConvergenceError, ParameterError
from levylab.models import Kind, LevyModel
from levylab.solver.grid import Grid1D, Grid2D
from levylab.solver.semigroup import _check_grid, semigroup, survival_pde

MAX_ITER = 1000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenPair:
    """``lam`` and ``phi`` with ``sum phi^2 h^d = 1`` and ``phi > 0`` near the centre.

    ``history`` lists ``(N, lambda_1(N))`` for the refinement levels used and
    ``extrapolated`` the Richardson value built from them with observed (or
    known) convergence ``order``.
    """

    lam: float
    phi: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    grid: Grid1D | Grid2D = field(repr=False)
    lam2: float | None = None
    history: tuple = ()
    extrapolated: float | None = None
    order: float | None = None

    def to_dict(self) -> dict:
        return {"lambda1": self.lam, "lambda2": self.lam2, "residual": self.residual,
                "iterations": self.iterations, "N": self.grid.N,
                "refinement": [{"N": n, "lambda1": v} for n, v in self.history],
                "extrapolated": self.extrapolated, "order": self.order}


def _inverse_iteration(L: np.ndarray, cell: float, center: int):
    cho = linalg.cho_factor(-L, lower=True)
    v = np.ones(L.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, MAX_ITER + 1):
        w = linalg.cho_solve(cho, v)
        v = w / np.linalg.norm(w)
        Lv = L @ v
        lam = -float(v @ Lv)
        res = float(np.linalg.norm(Lv + lam * v))
        if res <= RESIDUAL_TOL * lam:
            break
    else:
        raise ConvergenceError(f"inverse iteration stalled after {MAX_ITER} steps "
                               f"(residual {res:.3g})")
    if v[center] < 0:
        v = -v
    # residual is measured for the L2(h^d)-normalized vector
    return lam, v / math.sqrt(cell), res, it


def _center_index(grid) -> int:
    nodes = grid.nodes
    r = np.abs(nodes) if nodes.ndim == 1 else np.hypot(nodes[:, 0], nodes[:, 1])
    return int(np.argmin(r))


def _single(model: LevyModel, grid) -> EigenPair:
    sg = semigroup(model, grid)
    cell = grid.h ** grid.dimension
    lam, phi, res, it = _inverse_iteration(sg.L, cell, _center_index(grid))
    lam2 = None
    if sg.use_spectrum:
        w, _ = sg.spectrum
        lam2 = float(-w[1])
    return EigenPair(lam, phi, res, it, grid, lam2, ((grid.N, lam),))


def richardson(history, order: float | None = None) -> tuple[float, float]:
    """Extrapolated limit and the order used, from ``(N, value)`` pairs with doubling N."""
    vals = [v for _, v in history]
    if len(vals) < 2:
        return vals[-1], order
    if order is None:
        if len(vals) >= 3:
            d1, d2 = vals[-3] - vals[-2], vals[-2] - vals[-1]
            order = math.log2(d1 / d2) if d1 * d2 > 0 and d1 != d2 else 1.0
        else:
            order = 1.0
    lim = vals[-1] + (vals[-1] - vals[-2]) / (2.0 ** order - 1.0)
    return lim, order


def first_eigenpair(model: LevyModel, domain: Domain, grid, refine: bool = True) -> EigenPair:
    """Smallest eigenvalue of ``-L`` and its positive eigenvector by inverse iteration.

    With ``refine`` the eigenvalue is also computed at ``2N`` (and at ``N/2``
    for jump models, to measure the convergence order) and extrapolated.  The
    Brownian reference uses its known second order.
    """
    _check_grid(domain, grid)
    base = _single(model, grid)
    if not refine:
        return base
    levels = []
    known = 2.0 if model.kind is Kind.BROWNIAN else None
    if known is None and grid.N >= 8:
        levels.append(grid.__class__(*_coarser_args(grid)))
    levels.append(grid)
    levels.append(grid.__class__(*_finer_args(grid)))
    hist = []
    for g in levels:
        lam = base.lam if g == grid else _single(model, g).lam
        hist.append((g.N, lam))
    ext, order = richardson(hist, known)
    return EigenPair(base.lam, base.phi, base.residual, base.iterations, grid, base.lam2,
                     tuple(hist), ext, order)


def _coarser_args(grid):
    if isinstance(grid, Grid1D):
        return (grid.a, grid.N // 2)
    return (grid.a, grid.b, grid.N // 2)


def _finer_args(grid):
    if isinstance(grid, Grid1D):
        return (grid.a, grid.N * 2)
    return (grid.a, grid.b, grid.N * 2)


@dataclass(frozen=True)
class EigenLimitReport:
    times: tuple
    deviations: tuple  # max over nodes of |ratio - 1| per time
    lam1: float
    gap: float | None

    @property
    def nonincreasing(self) -> bool:
        d = self.deviations
        return all(d[i + 1] <= d[i] * (1 + 1e-9) + 1e-13 for i in range(len(d) - 1))

    def to_dict(self) -> dict:
        return {"times": list(self.times), "deviations": list(self.deviations),
                "lambda1": self.lam1, "gap": self.gap, "nonincreasing": self.nonincreasing}


def eigen_limit_check(model: LevyModel, domain: Domain, grid, times) -> EigenLimitReport:
    """Deviation of ``e^{lambda_1 t} psi_t(x) / (phi_1(x) int phi_1)`` from 1, per time.

    Uses the discrete eigenpair of the same grid, so only the higher modes
    contribute to the deviation.
    """
    if any(t <= 0 for t in times):
        raise ParameterError("times must be positive")
    pair = first_eigenpair(model, domain, grid, refine=False)
    cell = grid.h ** grid.dimension
    mass = float(pair.phi.sum() * cell)
    devs = []
    for t in times:
        psi = survival_pde(model, domain, t, grid)
        ratio = math.exp(pair.lam * t) * psi / (pair.phi * mass)
        devs.append(float(np.max(np.abs(ratio - 1.0))))
    gap = None if pair.lam2 is None else pair.lam2 - pair.lam
    return EigenLimitReport(tuple(float(t) for t in times), tuple(devs), pair.lam, gap)
