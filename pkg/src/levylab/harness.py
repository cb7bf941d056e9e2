"""Pass/fail checks of the structural properties of survival profiles.

Statistical checks compare each difference against ``z`` standard errors of
that difference under the coupled (common random numbers) estimator:

* PASS when no violation exceeds ``z = 3`` standard errors;
* FAIL when a violation exceeds the Bonferroni-corrected threshold for the
  number of comparisons in the report;
* INCONCLUSIVE in between.

Deterministic checks (PDE backend) use a fixed solver tolerance and never
return INCONCLUSIVE.  A check with zero comparisons fails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from levylab.domain import Domain, Window
from levylab.errors import ParameterError
from levylab.models import LevyModel, check_log_growth

Z_PASS = 3.0
SOLVER_TOL = 1e-10
SIGN_TOL = 1e-12


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"
    SKIPPED = "SKIPPED"


def bonferroni_z(m: int, z: float = Z_PASS) -> float:
    """One-sided threshold keeping the family-wise level of ``m`` comparisons at ``P(Z > z)``."""
    return float(norm.isf(norm.sf(z) / max(m, 1)))


def combine(verdicts) -> Verdict:
    vs = list(verdicts)
    if any(v is Verdict.FAIL for v in vs):
        return Verdict.FAIL
    if any(v is Verdict.INCONCLUSIVE for v in vs):
        return Verdict.INCONCLUSIVE
    if vs and all(v is Verdict.SKIPPED for v in vs):
        return Verdict.SKIPPED
    return Verdict.PASS


@dataclass(frozen=True, eq=False)
class ProfileData:
    """Values along the first axis with either a covariance (MC) or a fixed tolerance (PDE)."""

    x: np.ndarray
    values: np.ndarray
    cov: np.ndarray | None = None
    tol: float = SOLVER_TOL
    backend: str = "pde"

    @classmethod
    def from_mc(cls, profile) -> "ProfileData":
        return cls(np.asarray(profile.points)[:, 0].copy(), np.asarray(profile.values),
                   np.asarray(profile.cov), 0.0, "mc")

    @classmethod
    def from_values(cls, x, values, tol: float = SOLVER_TOL, backend: str = "pde") -> "ProfileData":
        return cls(np.asarray(x, dtype=float), np.asarray(values, dtype=float), None, tol, backend)

    def subset(self, idx) -> "ProfileData":
        idx = np.asarray(idx)
        cov = None if self.cov is None else self.cov[np.ix_(idx, idx)]
        return ProfileData(self.x[idx], self.values[idx], cov, self.tol, self.backend)

    def combination(self, idx, weights) -> tuple[float, float]:
        """Value and standard error of ``sum w_k v[idx_k]`` (SE 0 without covariance)."""
        idx = np.asarray(idx)
        w = np.asarray(weights, dtype=float)
        val = float(w @ self.values[idx])
        if self.cov is None:
            return val, 0.0
        c = self.cov[np.ix_(idx, idx)]
        return val, float(math.sqrt(max(w @ c @ w, 0.0)))

    def to_dict(self) -> dict:
        out = {"backend": self.backend, "x": self.x.tolist(), "values": self.values.tolist(),
               "tol": self.tol}
        if self.cov is not None:
            out["se"] = np.sqrt(np.maximum(np.diag(self.cov), 0)).tolist()
        return out


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one check over a family of comparisons.

    ``margins`` are the tested quantities (should be >= 0); ``thresholds``
    the tolerated negative excursion for each (``z * SE`` or solver tolerance).
    """

    name: str
    verdict: Verdict
    comparisons: int
    violations: int
    worst_margin: float | None
    worst_z: float | None
    margins: tuple = field(default=(), repr=False)
    ses: tuple = field(default=(), repr=False)
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict.value,
                "comparisons": self.comparisons, "violations": self.violations,
                "worst_margin": self.worst_margin, "worst_z": self.worst_z,
                "margins": list(self.margins), "ses": list(self.ses), "note": self.note}


def _judge(name: str, margins, ses, profile: ProfileData, note: str = "") -> CheckResult:
    """Verdict for margins that should be nonnegative."""
    m = len(margins)
    if m == 0:
        return CheckResult(name, Verdict.FAIL, 0, 0, None, None, note="no comparisons made")
    margins = np.asarray(margins, dtype=float)
    ses = np.asarray(ses, dtype=float)
    worst = int(np.argmin(margins))
    if profile.cov is None:
        bad = margins < -profile.tol
        verdict = Verdict.FAIL if bad.any() else Verdict.PASS
        return CheckResult(name, verdict, m, int(bad.sum()), float(margins[worst]), None,
                           tuple(margins.tolist()), tuple(ses.tolist()), note)
    zb = bonferroni_z(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(ses > 0, -margins / ses, np.where(margins < 0, np.inf, 0.0))
    fail = z > zb
    beyond = z > Z_PASS
    verdict = Verdict.FAIL if fail.any() else (Verdict.INCONCLUSIVE if beyond.any() else Verdict.PASS)
    return CheckResult(name, verdict, m, int(beyond.sum()), float(margins[worst]),
                       float(np.max(z)), tuple(margins.tolist()), tuple(ses.tolist()), note)


def _require_sorted(x):
    if np.any(np.diff(x) <= 0):
        raise ParameterError("profile points must be strictly increasing along e1")


def check_monotone(profile: ProfileData, a: float) -> dict[str, CheckResult]:
    """Nondecreasing on ``(-a, 0]`` and nonincreasing on ``[0, a)``, pair by pair."""
    x = profile.x
    _require_sorted(x)
    left, right = ([], []), ([], [])
    for k in range(x.size - 1):
        if x[k] <= -a or x[k + 1] >= a:
            continue
        if x[k + 1] <= 0:
            v, s = profile.combination([k, k + 1], [-1.0, 1.0])
            left[0].append(v)
            left[1].append(s)
        elif x[k] >= 0:
            v, s = profile.combination([k, k + 1], [1.0, -1.0])
            right[0].append(v)
            right[1].append(s)
    return {"monotone_left": _judge("monotone_left", *left, profile),
            "monotone_right": _judge("monotone_right", *right, profile)}


def equal_spaced_triples(x, lo: float, hi: float,
                         rtol: float = 1e-9) -> list[tuple[int, int, int]]:
    """Consecutive, equally spaced triples of points inside ``(lo, hi)``."""
    idx = [k for k in range(len(x)) if lo < x[k] < hi]
    out = []
    for k in range(len(idx) - 2):
        i, j, m = idx[k], idx[k + 1], idx[k + 2]
        if m - i != 2:
            continue
        d1, d2 = x[j] - x[i], x[m] - x[j]
        if abs(d1 - d2) <= rtol * max(abs(d1), abs(d2)):
            out.append((i, j, m))
    return out


def check_midconcave(profile: ProfileData, a: float, triples=None,
                     rtol: float = 1e-9) -> CheckResult:
    """``psi(x'') - psi(x') >= psi(x''') - psi(x'')`` on equally spaced triples in ``(-a/2, a/2)``."""
    x = profile.x
    _require_sorted(x)
    if triples is None:
        triples = equal_spaced_triples(x, -a / 2.0, a / 2.0)
    margins, ses, center = [], [], []
    for i, j, k in triples:
        d1, d2 = x[j] - x[i], x[k] - x[j]
        if abs(d1 - d2) > rtol * max(abs(d1), abs(d2)):
            raise ParameterError(f"triple ({x[i]}, {x[j]}, {x[k]}) is not equally spaced")
        if not (-a / 2.0 < x[i] and x[k] < a / 2.0):
            raise ParameterError("triples must lie inside (-a/2, a/2)")
        v, s = profile.combination([i, j, k], [-1.0, 2.0, -1.0])
        margins.append(v)
        ses.append(s)
        center.append(x[i] < 0 < x[k])
    res = _judge("midconcave", margins, ses, profile)
    if margins:
        m = np.asarray(margins)
        c = np.asarray(center)
        note = ""
        if c.any() and (~c).any():
            note = (f"min margin across 0: {m[c].min():.3g}; "
                    f"elsewhere: {m[~c].min():.3g}")
        res = CheckResult(res.name, res.verdict, res.comparisons, res.violations,
                          res.worst_margin, res.worst_z, res.margins, res.ses, note)
    return res


@dataclass(frozen=True)
class ProfileReport:
    """A profile with its verdicts; verdicts can be recomputed from the stored data."""

    profile: ProfileData
    a: float
    results: dict
    label: str = ""

    @property
    def verdict(self) -> Verdict:
        return combine(r.verdict for r in self.results.values())

    def to_dict(self) -> dict:
        return {"label": self.label, "a": self.a, "verdict": self.verdict.value,
                "profile": self.profile.to_dict(),
                "checks": {k: r.to_dict() for k, r in self.results.items()}}


def profile_report(profile: ProfileData, a: float, mid: ProfileData | None = None,
                   label: str = "") -> ProfileReport:
    """Monotonicity on ``profile`` and mid-concavity on ``mid`` (or ``profile``)."""
    results = dict(check_monotone(profile, a))
    results["midconcave"] = check_midconcave(mid if mid is not None else profile, a)
    return ProfileReport(profile, a, results, label)


# ---------------------------------------------------------------------------
# backend agreement


@dataclass(frozen=True)
class AgreementResult:
    verdict: Verdict
    comparisons: int
    worst_excess: float  # max of |diff| - allowed, should be <= 0
    diffs: tuple
    allowed: tuple
    note: str = ""

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "comparisons": self.comparisons,
                "worst_excess": self.worst_excess, "diffs": list(self.diffs),
                "allowed": list(self.allowed), "note": self.note}


def check_agreement(mc_values, mc_se, ref_values, ref_tol, bias_budget: float = 0.0,
                    note: str = "") -> AgreementResult:
    """``|mc - ref| <= 3 SE + ref_tol + bias_budget`` at every point.

    FAIL when some difference also exceeds the Bonferroni-corrected multiple
    of SE plus the deterministic allowances; INCONCLUSIVE in between.
    """
    mc = np.atleast_1d(np.asarray(mc_values, dtype=float))
    se = np.atleast_1d(np.asarray(mc_se, dtype=float))
    ref = np.atleast_1d(np.asarray(ref_values, dtype=float))
    tol = np.broadcast_to(np.asarray(ref_tol, dtype=float), mc.shape)
    m = mc.size
    if m == 0:
        return AgreementResult(Verdict.FAIL, 0, math.inf, (), (), "no comparisons made")
    diff = np.abs(mc - ref)
    allowed = Z_PASS * se + tol + bias_budget
    hard = bonferroni_z(2 * m) * se + tol + bias_budget  # two-sided
    if np.any(diff > hard):
        v = Verdict.FAIL
    elif np.any(diff > allowed):
        v = Verdict.INCONCLUSIVE
    else:
        v = Verdict.PASS
    return AgreementResult(v, m, float(np.max(diff - allowed)), tuple(diff.tolist()),
                           tuple(allowed.tolist()), note)


# ---------------------------------------------------------------------------
# solver-based checks


@dataclass(frozen=True)
class SignReport:
    verdict: Verdict
    comparisons: int
    min_positive_side: float  # min of f on H_+ minus closure(U_+); should be >= -tol
    max_negative_side: float  # max of f on H_- minus closure(U_-); should be <= tol
    min_kernel_difference: float  # min of p_U(s,x,y) - p_U(s,Tx,y) over U_+ x U_+
    term_left: dict
    cases: tuple

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "comparisons": self.comparisons,
                "min_positive_side": self.min_positive_side,
                "max_negative_side": self.max_negative_side,
                "min_kernel_difference": self.min_kernel_difference,
                "term_left": self.term_left, "cases": list(self.cases)}


def check_sign_structure(model: LevyModel, domain: Domain, windows, s_values, grid,
                         t: float = 0.5, reach: float | None = None, tol: float = SIGN_TOL) -> SignReport:
    """Sign sweep of the reflection-difference kernel.

    For each window and time ``s`` and every node ``x`` of ``U_+``, ``f_s(x, z)``
    is evaluated at all lattice nodes ``z > r(U)`` and ``z < l(U)`` up to
    ``reach`` beyond the domain.  Also records the contribution of exterior
    points below ``l(U)`` to the reflection identity at time ``t``, which must
    vanish when ``l(U) = -a``.
    """
    from levylab.solver.difference import DifferenceSemigroup, check_difference_identity

    a = domain.a
    reach = a if reach is None else reach
    h = grid.h
    far = int(round(reach / h))
    min_pos, max_neg, min_ker = math.inf, -math.inf, math.inf
    count = 0
    cases = []
    term_left = {}
    bad = False
    for U in windows:
        ds = DifferenceSemigroup.build(model, grid, U)
        lat = ds.lattice
        z_hi = np.arange(lat.stop, grid.N + far)
        z_lo = np.arange(-far, lat.first)
        wd_hi = ds.weight_difference(z_hi)
        wd_lo = ds.weight_difference(z_lo) if z_lo.size else np.zeros((lat.plus.size, 0))
        for s in s_values:
            Kd = ds.kernel(s)
            f_hi = Kd @ wd_hi
            f_lo = Kd @ wd_lo
            mp = float(f_hi.min()) if f_hi.size else math.inf
            mn = float(f_lo.max()) if f_lo.size else -math.inf
            mk = float(Kd.min())
            min_pos, max_neg, min_ker = min(min_pos, mp), max(max_neg, mn), min(min_ker, mk)
            count += f_hi.size + f_lo.size
            ok = mp >= -tol and mn <= tol and mk >= -tol
            bad |= not ok
            cases.append({"window": [U.left, U.right], "s": s, "min_positive_side": mp,
                          "max_negative_side": mn, "min_kernel_difference": mk, "ok": ok})
        if abs(U.left + a) < 1e-12:
            x_probe = grid.nodes[lat.plus[len(lat.plus) // 2]]
            chk = check_difference_identity(model, domain, U, float(x_probe), t, grid, panels=8)
            term_left[f"({U.left:g}, {U.right:g})"] = chk.term_left
            bad |= chk.term_left != 0.0
    verdict = Verdict.FAIL if bad or count == 0 else Verdict.PASS
    return SignReport(verdict, count, min_pos, max_neg, min_ker, term_left, tuple(cases))


@dataclass(frozen=True)
class EigenShapeReport:
    verdict: Verdict
    lam1: float | None
    results: dict
    reason: str = ""

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "lambda1": self.lam1, "reason": self.reason,
                "checks": {k: r.to_dict() for k, r in self.results.items()}}


def midzone_indices(N: int, count: int = 19) -> np.ndarray:
    """``count`` equally spaced node indices inside the middle half of an N-node grid, near-centred."""
    lo = N // 4 + 1
    hi = 3 * N // 4 - 2
    step = max(1, (hi - lo) // (count - 1))
    idx = lo + step * np.arange(count)
    # centre the set as well as integer indices allow
    shift = ((N - 1) - (idx[0] + idx[-1])) // 2
    return idx + shift


def shape_report(x, phi, a: float, N: int, profile_idx, tol: float = SOLVER_TOL) -> dict:
    mono = ProfileData.from_values(x[profile_idx], phi[profile_idx], tol)
    mid_idx = midzone_indices(N)
    mid = ProfileData.from_values(x[mid_idx], phi[mid_idx], tol)
    out = dict(check_monotone(mono, a))
    out["midconcave"] = check_midconcave(mid, a)
    return out


def check_eigen_shape(model: LevyModel, domain: Domain, grid, pair=None) -> EigenShapeReport:
    """Monotonicity and mid-concavity of the first eigenfunction."""
    from levylab.solver.eigen import first_eigenpair

    growth = check_log_growth(model)
    if not growth.ok:
        return EigenShapeReport(Verdict.SKIPPED, None, {}, f"log-growth condition fails: {growth.reason}")
    if pair is None:
        pair = first_eigenpair(model, domain, grid, refine=False)
    res = shape_report(grid.nodes, pair.phi, domain.a, grid.N, grid.profile_indices(33))
    return EigenShapeReport(combine(r.verdict for r in res.values()), pair.lam, res)


@dataclass(frozen=True)
class ExitComparison:
    times: tuple
    exit_set: tuple
    mc: float
    se: float
    pde: float
    tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__, times=list(self.times), exit_set=list(self.exit_set))


@dataclass(frozen=True)
class IkedaWatanabeReport:
    verdict: Verdict
    rows: tuple
    agreement: AgreementResult

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "rows": [r.to_dict() for r in self.rows],
                "agreement": self.agreement.to_dict()}


def check_ikeda_watanabe(model: LevyModel, domain: Domain, x: float, rects, n: int,
                         seed: int, eps: float | None = None, N: int = 1024,
                         jobs: int = 1, sample=None) -> IkedaWatanabeReport:
    """Monte Carlo exit frequencies against ``int_A int_B h_D`` from the solver.

    Each rectangle is ``((t0, t1), (z0, z1))``.  The solver value is the
    first-order Richardson extrapolation from ``N/2`` and ``N`` nodes; its
    tolerance is the difference between the two levels.
    """
    from levylab.pathsim import sample_exit_law
    from levylab.solver.grid import Grid1D
    from levylab.solver.semigroup import exit_probability

    if sample is None:
        sample = sample_exit_law(model, domain, x, n, eps, seed, jobs)
    rows = []
    for times, B in rects:
        p, se = sample.probability(times, B)
        fine = exit_probability(model, domain, x, times, B, Grid1D(domain.a, N))
        coarse = exit_probability(model, domain, x, times, B, Grid1D(domain.a, N // 2))
        ext = 2.0 * fine - coarse
        rows.append(ExitComparison(tuple(times), tuple(B), p, se, ext, abs(fine - coarse)))
    agree = check_agreement([r.mc for r in rows], [r.se for r in rows],
                            [r.pde for r in rows], [r.tol for r in rows])
    return IkedaWatanabeReport(agree.verdict, tuple(rows), agree)
