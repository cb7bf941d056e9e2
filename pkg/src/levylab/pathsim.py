"""Monte Carlo estimation of survival probabilities and exit laws.

The process is approximated by the compound-Poisson process keeping only the
jumps of size larger than ``eps``; no small-jump compensation is added, so
the approximation stays pure-jump.  Positions are constant between jumps and
exit is detected exactly at jump arrivals.

Every path is simulated once from the origin, recording the running minimum
and maximum of its displacement.  A start point ``x`` has survived up to time
``t`` iff ``-a - min S < x < a - max S`` (per coordinate), so all start points
of a profile share the same jumps (common random numbers) and survival is
nested in ``t`` and in the domain path by path.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from levylab import _mc_kernels as K
from levylab.domain import Domain
from levylab.errors import ConvergenceError, DomainError, NoJumpError, ParameterError
from levylab.models import Kind, LevyModel, radial_tail_mass

MAX_JUMPS = 10**9


def default_eps(domain: Domain) -> float:
    """Default truncation radius ``1e-3 * a``."""
    return 1e-3 * domain.a


def compound_poisson_rate(model: LevyModel, eps: float) -> float:
    """Jump rate ``lambda(eps) = nu({|x| > eps})`` of the truncated process."""
    model._require_jumps()
    if not eps > 0:
        raise DomainError("truncation radius must be positive")
    return radial_tail_mass(model, eps)


# ---------------------------------------------------------------------------
# jump-radius law


def _tail_quantile(model: LevyModel, eps: float, rate: float, u: np.ndarray) -> np.ndarray:
    """Radius ``r`` with ``nu(|x| > r) = u * rate``, for ``u`` in (0, 1]."""
    a = model.alpha
    if model.kind is Kind.ALPHA_STABLE:
        return eps * u ** (-1.0 / a)
    if model.kind is Kind.TRUNCATED_STABLE:
        R = model.R
        return (R ** -a + u * (eps ** -a - R ** -a)) ** (-1.0 / a)
    # tempered: invert the tail mass numerically in log-log coordinates
    theta = model.theta
    r_max = eps + 60.0 / theta
    grid = np.geomspace(eps, r_max, 4000)
    log_u = np.log([radial_tail_mass(model, r) / rate for r in grid])
    log_u[0] = 0.0
    inv = PchipInterpolator(log_u[::-1], np.log(grid)[::-1])
    lu = np.log(u)
    out = np.empty_like(u)
    inside = lu >= log_u[-1]
    out[inside] = np.exp(inv(lu[inside]))
    # beyond the grid the tail decays like exp(-theta r)
    out[~inside] = r_max + (log_u[-1] - lu[~inside]) / theta
    return out


@dataclass(frozen=True, eq=False)
class JumpLaw:
    """Rate and radius quantile table of the jumps larger than ``eps``."""

    model: LevyModel
    eps: float
    rate: float
    table: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, model: LevyModel, eps: float) -> "JumpLaw":
        return _jump_law(model, float(eps))


@lru_cache(maxsize=32)
def _jump_law(model: LevyModel, eps: float) -> JumpLaw:
    rate = compound_poisson_rate(model, eps)
    if not rate > 0:
        raise NoJumpError(f"no jumps larger than eps={eps} for {model.describe()}")
    u = K.table_abscissae()
    table = _tail_quantile(model, eps, rate, u.ravel()).reshape(u.shape)
    table.setflags(write=False)
    return JumpLaw(model, eps, rate, np.ascontiguousarray(table))


def sample_jump(model: LevyModel, eps: float, seed: int, size: int = 1) -> np.ndarray:
    """Independent jump displacements, shape ``(size, d)``.

    Draw ``i`` is the first jump of path ``i`` of the stream ``seed``.
    """
    law = JumpLaw.build(model, eps)
    out = np.empty((int(size), model.dimension))
    K.draw_jumps(np.uint64(seed), int(size), model.dimension, law.table, out)
    return out


# ---------------------------------------------------------------------------
# raw path simulation


@dataclass(frozen=True, eq=False)
class PathRecord:
    """Running extrema per path and horizon, plus stopping data."""

    mins: np.ndarray  # (n, H, d)
    maxs: np.ndarray  # (n, H, d)
    tau: np.ndarray  # (n,)  exit time in exit mode, inf otherwise
    displacement: np.ndarray  # (n, d)
    jumps: np.ndarray  # (n,)


def simulate_paths(model: LevyModel, domain: Domain, horizons, pmin, pmax, n: int,
                   eps: float, seed: int, jobs: int = 1, exit_mode: bool = False) -> PathRecord:
    """Run ``n`` paths and record what survival and exit queries need.

    Paths stop as soon as no start point of the box ``[pmin, pmax]`` can still
    be alive, or after the last horizon.  The output does not depend on
    ``jobs``.
    """
    if n <= 0:
        raise ParameterError("path count must be positive")
    if model.dimension != domain.dimension:
        raise ParameterError("model and domain dimensions differ")
    law = JumpLaw.build(model, eps)
    d = model.dimension
    horizons = np.ascontiguousarray(horizons, dtype=float)
    if np.any(np.diff(horizons) < 0):
        raise ParameterError("horizons must be sorted")
    H = horizons.size
    hw = domain.half_widths
    lo, hi = -hw, hw.copy()
    pmin = np.asarray(pmin, dtype=float).reshape(d)
    pmax = np.asarray(pmax, dtype=float).reshape(d)
    mins = np.empty((n, H, d))
    maxs = np.empty((n, H, d))
    tau = np.empty(n)
    disp = np.empty((n, d))
    jumps = np.empty(n, dtype=np.int64)

    def work(bounds):
        s, e = bounds
        return K.walk_paths(np.uint64(seed), s, e - s, d, law.rate, law.table, horizons,
                            lo, hi, pmin, pmax, exit_mode, MAX_JUMPS,
                            mins[s:e], maxs[s:e], tau[s:e], disp[s:e], jumps[s:e])

    jobs = max(1, int(jobs))
    edges = np.linspace(0, n, jobs + 1).astype(int)
    chunks = [(int(s), int(e)) for s, e in zip(edges[:-1], edges[1:]) if e > s]
    if jobs == 1:
        overflow = sum(work(c) for c in chunks)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            overflow = sum(pool.map(work, chunks))
    if overflow:
        raise ConvergenceError(f"{overflow} paths exceeded {MAX_JUMPS} jumps")
    return PathRecord(mins, maxs, tau, disp, jumps)


def _alive(record: PathRecord, domain: Domain, h: int, x: np.ndarray) -> np.ndarray:
    hw = domain.half_widths
    ok = np.ones(record.mins.shape[0], dtype=bool)
    for c in range(hw.size):
        ok &= (-hw[c] - record.mins[:, h, c] < x[c]) & (x[c] < hw[c] - record.maxs[:, h, c])
    return ok


# ---------------------------------------------------------------------------
# survival estimates


@dataclass(frozen=True)
class SurvivalEstimate:
    """Monte Carlo estimate of ``P^x(tau_D > t)``."""

    value: float
    se: float
    n: int
    eps: float
    seed: int
    t: float
    point: tuple

    def to_dict(self) -> dict:
        return {"point": list(self.point), "t": self.t, "value": self.value, "se": self.se,
                "n": self.n, "eps": self.eps, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class SurvivalProfile:
    """Estimates at several start points from the same paths.

    ``cov`` is the covariance matrix of the estimates, so the standard error
    of any linear combination (differences, second differences) is exact for
    the coupled estimator.
    """

    points: np.ndarray  # (P, d)
    t: float
    values: np.ndarray
    cov: np.ndarray
    n: int
    eps: float
    seed: int
    symmetrized: bool = False

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0))

    @property
    def estimates(self) -> list[SurvivalEstimate]:
        se = self.se
        return [SurvivalEstimate(float(v), float(s), self.n, self.eps, self.seed, self.t,
                                 tuple(float(c) for c in p))
                for v, s, p in zip(self.values, se, self.points)]

    def combination(self, weights) -> tuple[float, float]:
        """Value and standard error of ``sum_k w_k psi(x_k)``."""
        w = np.asarray(weights, dtype=float)
        return float(w @ self.values), float(math.sqrt(max(w @ self.cov @ w, 0.0)))

    def to_dict(self) -> dict:
        return {"t": self.t, "n": self.n, "eps": self.eps, "seed": self.seed,
                "symmetrized": self.symmetrized, "points": self.points.tolist(),
                "values": self.values.tolist(), "se": self.se.tolist(),
                "cov": self.cov.tolist()}


def _profile_from_indicators(ind: np.ndarray, points, t, n, eps, seed, symmetrized):
    values = ind.mean(axis=0)
    centered = ind - values
    cov = centered.T @ centered / (n * max(n - 1, 1))
    return SurvivalProfile(np.asarray(points, dtype=float), float(t), values, cov,
                           n, float(eps), int(seed), symmetrized)


def _as_points(points, d: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if d == 1:
        return pts.reshape(-1, 1)
    pts = pts.reshape(-1, 2)
    return pts


def estimate_survival_profiles(model: LevyModel, domain: Domain, points, times, n: int,
                               eps: float | None = None, seed: int = 0, jobs: int = 1,
                               symmetrize: bool = False) -> dict[float, SurvivalProfile]:
    """Survival profiles at every horizon in ``times`` from one set of paths.

    With ``symmetrize`` each path contributes the average of its indicators at
    ``x`` and at the mirror image of ``x`` in the first coordinate, which makes
    estimates at ``x`` and its mirror identical.
    """
    if n <= 0:
        raise ParameterError("path count must be positive")
    d = domain.dimension
    pts = _as_points(points, d)
    if d == 2 and pts.shape[0] > 1 and np.ptp(pts[:, 1]) > 0:
        raise ParameterError("2D profile points must share their second coordinate")
    eps = default_eps(domain) if eps is None else float(eps)
    times = sorted(float(t) for t in np.atleast_1d(times))
    if any(t < 0 for t in times):
        raise DomainError("horizons must be nonnegative")
    mirror = pts.copy()
    mirror[:, 0] *= -1.0
    query = np.vstack([pts, mirror]) if symmetrize else pts
    inside = np.asarray(domain.contains(query)).reshape(-1)
    if inside.any():
        pmin = query[inside].min(axis=0)
        pmax = query[inside].max(axis=0)
    else:
        pmin = pmax = np.zeros(d)
    record = simulate_paths(model, domain, times, pmin, pmax, n, eps, seed, jobs)
    out = {}
    P = pts.shape[0]
    for h, t in enumerate(times):
        ind = np.zeros((n, query.shape[0]), dtype=np.float64)
        for k in range(query.shape[0]):
            if inside[k]:
                ind[:, k] = _alive(record, domain, h, query[k])
        if symmetrize:
            ind = 0.5 * (ind[:, :P] + ind[:, P:])
        out[t] = _profile_from_indicators(ind, pts, t, n, eps, seed, symmetrize)
    return out


def estimate_survival_profile(model: LevyModel, domain: Domain, points, t: float, n: int,
                              eps: float | None = None, seed: int = 0, jobs: int = 1,
                              symmetrize: bool = False) -> SurvivalProfile:
    """Survival estimates at ``points`` with common random numbers."""
    return estimate_survival_profiles(model, domain, points, [t], n, eps, seed, jobs,
                                      symmetrize)[float(t)]


def estimate_survival(model: LevyModel, domain: Domain, x, t: float, n: int,
                      eps: float | None = None, seed: int = 0, jobs: int = 1) -> SurvivalEstimate:
    """Estimate ``P^x(tau_D > t)`` with its binomial standard error."""
    return estimate_survival_profile(model, domain, [x], t, n, eps, seed, jobs).estimates[0]


# ---------------------------------------------------------------------------
# exit law


@dataclass(frozen=True, eq=False)
class ExitSample:
    """Samples of the exit time and exit position from a start point."""

    start: np.ndarray
    tau: np.ndarray
    position: np.ndarray  # (n, d)
    eps: float
    seed: int

    @property
    def n(self) -> int:
        return self.tau.size

    def probability(self, times=(0.0, math.inf), first=(-math.inf, math.inf),
                    second=None) -> tuple[float, float]:
        """Empirical ``P(tau in times, X(tau) in B)`` and its standard error.

        ``B`` is the box ``first x second`` (``second`` ignored in 1D).
        """
        t0, t1 = times
        hit = (self.tau > t0) & (self.tau < t1)
        x1 = self.position[:, 0]
        hit &= (x1 > first[0]) & (x1 < first[1])
        if second is not None and self.position.shape[1] > 1:
            x2 = self.position[:, 1]
            hit &= (x2 > second[0]) & (x2 < second[1])
        p = hit.mean()
        return float(p), float(math.sqrt(p * (1.0 - p) / self.n))

    def mean_exit_time(self) -> tuple[float, float]:
        return float(self.tau.mean()), float(self.tau.std(ddof=1) / math.sqrt(self.n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.position.shape[1]
        w.writerow(["tau"] + [f"x{c + 1}" for c in range(d)])
        for t, p in zip(self.tau, self.position):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in p])
        return buf.getvalue()


def sample_exit_law(model: LevyModel, domain: Domain, x, n: int, eps: float | None = None,
                    seed: int = 0, jobs: int = 1) -> ExitSample:
    """Sample ``(tau_D, X(tau_D))`` for paths started at ``x``."""
    d = domain.dimension
    x = np.asarray(x, dtype=float).reshape(d)
    if not bool(domain.contains(x)):
        raise DomainError("start point must lie in the domain")
    eps = default_eps(domain) if eps is None else float(eps)
    record = simulate_paths(model, domain, [], x, x, n, eps, seed, jobs, exit_mode=True)
    return ExitSample(x, record.tau, x + record.displacement, eps, int(seed))
