"""Killed semigroup ``P_D(t) = exp(t L)`` and quantities derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import expm_multiply

from levylab.domain import Domain
from levylab.errors import DomainError, NumericalInstabilityError, ParameterError
from levylab.models import LevyModel, levy_density, radial_moment
from levylab.solver.assembly import DiscretizedOperator, assemble_generator, tail_weight
from levylab.solver.grid import Grid1D, Grid2D

CLIP_TOL = 1e-9
EIGH_MAX = 2048


def positive_expm(A: np.ndarray, t: float) -> np.ndarray:
    """``exp(t A)`` for a Metzler matrix ``A`` with entrywise nonnegative output.

    ``A + sigma I`` is nonnegative, so its Taylor series has no cancellation;
    the factor ``exp(-sigma t)`` is spread over the squaring steps to avoid
    underflow.
    """
    n = A.shape[0]
    sigma = max(0.0, float(-np.min(np.diag(A))))
    B = t * (A + sigma * np.eye(n))
    norm = float(np.max(np.abs(B).sum(axis=1))) if n else 0.0
    j = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    B /= 2.0 ** j
    decay = math.exp(-t * sigma / 2.0 ** j)
    term = np.eye(n)
    E = np.eye(n)
    for k in range(1, 40):
        term = term @ B / k
        E += term
        if np.max(term) <= 1e-18 * np.max(E):
            break
    E *= decay
    for _ in range(j):
        E = E @ E
    return E


@dataclass(eq=False)
class KilledSemigroup:
    """Spectral and resolvent computations for a fixed discretized operator."""

    op: DiscretizedOperator

    @property
    def L(self) -> np.ndarray:
        return self.op.matrix

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (descending, i.e. ``-lambda_1`` first) and orthonormal eigenvectors."""
        w, V = linalg.eigh(self.L)
        order = np.argsort(w)[::-1]
        return w[order], V[:, order]

    @cached_property
    def _cho(self):
        return linalg.cho_factor(-self.L, lower=True)

    @property
    def use_spectrum(self) -> bool:
        return self.op.size <= EIGH_MAX

    def apply(self, t: float, f: np.ndarray) -> np.ndarray:
        """``exp(t L) f``."""
        if t == 0:
            return np.array(f, dtype=float, copy=True)
        if self.use_spectrum:
            w, V = self.spectrum
            return V @ (np.exp(w * t) * (V.T @ f))
        return expm_multiply(t * self.L, f)

    def survival(self, t: float) -> np.ndarray:
        if t < 0:
            raise DomainError("t must be nonnegative")
        psi = self.apply(t, np.ones(self.op.size))
        over = max(float(np.max(psi - 1.0)), float(np.max(-psi)), 0.0)
        if over > CLIP_TOL:
            raise NumericalInstabilityError(f"survival left [0, 1] by {over:.3g}")
        return np.clip(psi, 0.0, 1.0)

    def kernel(self, t: float) -> np.ndarray:
        if not t > 0:
            raise DomainError("kernel time must be positive")
        P = positive_expm(self.L, t)
        return 0.5 * (P + P.T)

    def green(self) -> np.ndarray:
        G = linalg.cho_solve(self._cho, np.eye(self.op.size))
        return 0.5 * (G + G.T)

    def mean_exit_time(self) -> np.ndarray:
        return linalg.cho_solve(self._cho, np.ones(self.op.size))

    def time_integral(self, t0: float, t1: float, f: np.ndarray) -> np.ndarray:
        """``int_t0^t1 exp(s L) f ds`` (``t1`` may be infinite)."""
        if not 0 <= t0 <= t1:
            raise DomainError("need 0 <= t0 <= t1")
        # int_t0^t1 e^{sL} ds = (-L)^{-1} (e^{t0 L} - e^{t1 L})
        g = self.apply(t0, f)
        if not math.isinf(t1):
            g = g - self.apply(t1, f)
        return linalg.cho_solve(self._cho, g)


# ---------------------------------------------------------------------------
# operator cache


_OPS: dict = {}


def generator(model: LevyModel, grid: Grid1D | Grid2D) -> DiscretizedOperator:
    """Memoized :func:`assemble_generator` (operators are immutable)."""
    key = (model, grid)
    op = _OPS.get(key)
    if op is None:
        op = assemble_generator(model, grid)
        if len(_OPS) > 16:
            _OPS.clear()
        _OPS[key] = op
    return op


_SEMI: dict = {}


def semigroup(model: LevyModel, grid: Grid1D | Grid2D) -> KilledSemigroup:
    key = (model, grid)
    sg = _SEMI.get(key)
    if sg is None:
        sg = KilledSemigroup(generator(model, grid))
        if len(_SEMI) > 8:
            _SEMI.clear()
        _SEMI[key] = sg
    return sg


def _check_grid(domain: Domain, grid):
    if tuple(domain.half_widths) != tuple(grid.domain.half_widths):
        raise ParameterError("grid does not cover the domain")


# ---------------------------------------------------------------------------
# public operations


def survival_pde(model: LevyModel, domain: Domain, t: float, grid) -> np.ndarray:
    """Survival probabilities ``P^x(tau_D > t)`` at the grid nodes."""
    _check_grid(domain, grid)
    if t == 0:
        return np.ones(grid.size)
    return semigroup(model, grid).survival(t)


@dataclass(frozen=True, eq=False)
class KilledKernel:
    """``matrix[i, j] ~ p_D(s, x_i, x_j) h^d``."""

    s: float
    matrix: np.ndarray = field(repr=False)
    grid: Grid1D | Grid2D = field(repr=False)


def killed_kernel(model: LevyModel, domain: Domain, s: float, grid) -> KilledKernel:
    """The killed transition kernel at time ``s``."""
    _check_grid(domain, grid)
    return KilledKernel(float(s), semigroup(model, grid).kernel(s), grid)


def green_function(model: LevyModel, domain: Domain, grid) -> np.ndarray:
    """``G = -L^{-1}``, with ``G[i, j] ~ G_D(x_i, x_j) h^d``.

    Row sums give the mean exit times ``E^x tau_D``.
    """
    _check_grid(domain, grid)
    return semigroup(model, grid).green()


def _exterior_density(model: LevyModel, domain: Domain, y: np.ndarray, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if bool(np.all(np.abs(z) <= domain.half_widths)):
        raise DomainError("z must lie outside the closed domain")
    if y.ndim == 1:
        r = np.abs(y - z[0])
    else:
        r = np.hypot(y[:, 0] - z[0], y[:, 1] - z[1])
    return levy_density(model, r)


def exit_kernel(model: LevyModel, domain: Domain, x_index: int, s: float, z, grid) -> float:
    """``h_D(x, s, z) = sum_j P_D(s)[x, j] nu(x_j - z)``."""
    _check_grid(domain, grid)
    if not s > 0:
        raise DomainError("s must be positive")
    e = np.zeros(grid.size)
    e[x_index] = 1.0
    row = semigroup(model, grid).apply(s, e)
    return float(row @ _exterior_density(model, domain, grid.nodes, z))


def exterior_rate_1d(model: LevyModel, grid: Grid1D, lo: float, hi: float,
                     mode: str = "lattice") -> np.ndarray:
    """Jump rate from each node into the exterior set ``(lo, hi)``.

    ``mode="lattice"`` uses the lattice weights of the discrete walk (the set
    must be a union of exterior cells, i.e. its finite ends on cell faces);
    ``mode="continuous"`` integrates ``nu`` exactly.
    """
    a = grid.a
    if not (hi <= -a or lo >= a):
        raise DomainError("exit set must lie outside the closed domain")
    x = grid.nodes
    if lo >= a:
        d_lo, d_hi = lo - x, hi - x
        first = np.arange(grid.N, 0, -1)  # lattice offset of the cell starting at lo=a
        kf_lo = grid.face_index(lo) - grid.face_index(a) if not math.isinf(lo) else None
        kf_hi = grid.face_index(hi) - grid.face_index(a) if not math.isinf(hi) else None
    else:
        d_lo, d_hi = x - hi, x - lo
        first = np.arange(1, grid.N + 1)
        kf_lo = grid.face_index(-a) - grid.face_index(hi) if not math.isinf(hi) else None
        kf_hi = grid.face_index(-a) - grid.face_index(lo) if not math.isinf(lo) else None
    if mode == "continuous":
        return np.array([radial_moment(model, p, q) for p, q in zip(d_lo, d_hi)])
    if mode != "lattice":
        raise ParameterError(f"unknown exit mode {mode!r}")
    op = generator(model, grid)
    h = grid.h

    def beyond(k):
        # sum_{j >= k} W_j with W_1 sum = total / 2
        return np.array([op.meta["total_rate"] / 2.0 if kk <= 1 else tail_weight(model, h, int(kk))
                         for kk in k])

    near = first + kf_lo
    out = beyond(near)
    if kf_hi is not None:
        out = out - beyond(first + kf_hi)
    return out


def exit_probability(model: LevyModel, domain: Domain, x: float, times, exit_set,
                     grid: Grid1D, mode: str = "lattice") -> float:
    """``P^x(tau_D in A, X(tau_D) in B)`` from ``int_A int_B h_D(x, s, z) dz ds``.

    ``A = times = (t0, t1)``; ``B = exit_set = (lo, hi)`` outside the domain.
    Values at a start point between nodes are interpolated linearly.
    """
    _check_grid(domain, grid)
    t0, t1 = times
    rate = exterior_rate_1d(model, grid, exit_set[0], exit_set[1], mode)
    sg = semigroup(model, grid)
    # time integral of the killed kernel applied to the rate vector; P is symmetric
    occ = sg.time_integral(t0, t1, rate)
    return float(node_interp(grid, occ, x))


def node_interp(grid: Grid1D, values: np.ndarray, x) -> np.ndarray | float:
    """Linear interpolation of a node vector; constant beyond the outer nodes."""
    return np.interp(x, grid.nodes, values)
