"""Exact equilibrium analysis of the two-generator game on finite sample spaces.

Works entirely with probability mass functions over a shared finite support,
where the optimal discriminators have closed forms, the minimax objective
can be evaluated exactly, and the equilibrium can be found by brute force.
Two independent routes compute the objective value: the direct plug-in
expansion of the optimal discriminators, and a Jensen-Shannon form; they
must agree to near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscreteDistribution",
    "GameSpec",
    "OptimalityReport",
    "SearchResult",
    "optimal_discriminators",
    "verify_optimality",
    "jsd",
    "kl",
    "objective_value",
    "objective_value_jsd",
    "equilibrium_search",
    "simplex_grid",
]

LOG4 = float(np.log(4.0))


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability mass function over a finite support."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("probs must be a non-empty vector")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")

    @property
    def support_size(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class GameSpec:
    """Positive/negative data pmfs, the two generator pmfs, and the game weights.

    The unlabeled marginal is always derived as pi_p*p_p + pi_n*p_n, never
    stored, so the mixture identity holds by construction.
    """

    p_p: DiscreteDistribution
    p_n: DiscreteDistribution
    p_gp: DiscreteDistribution
    p_gn: DiscreteDistribution
    pi_p: float
    lambda_p: float = 1.0
    lambda_u: float = 1.0
    lambda_n: float = 1.0

    def __post_init__(self):
        k = self.p_p.support_size
        for name in ("p_n", "p_gp", "p_gn"):
            if getattr(self, name).support_size != k:
                raise ValueError(f"{name} support size differs from p_p")
        if not 0.0 < self.pi_p < 1.0:
            raise ValueError(f"pi_p {self.pi_p} outside (0, 1)")
        if min(self.lambda_p, self.lambda_u, self.lambda_n) < 0:
            raise ValueError("lambda weights must be non-negative")

    @property
    def pi_n(self) -> float:
        return 1.0 - self.pi_p

    @property
    def support_size(self) -> int:
        return self.p_p.support_size

    @property
    def p(self) -> np.ndarray:
        """Unlabeled marginal pmf."""
        return self.pi_p * self.p_p.probs + self.pi_n * self.p_n.probs

    @property
    def p_g_mix(self) -> np.ndarray:
        """Prior-weighted mixture of the two generator pmfs."""
        return self.pi_p * self.p_gp.probs + self.pi_n * self.p_gn.probs


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num/den with 0/0 defined as 0.5 (off-support points)."""
    out = np.full_like(num, 0.5)
    mask = den > 0
    out[mask] = num[mask] / den[mask]
    return out


def optimal_discriminators(spec: GameSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form best responses of the three discriminators, per support point.

    Each is a density ratio of the form real/(real + fake); points where both
    densities vanish get 0.5 by convention.
    """
    pp, pgp, pgn = spec.p_p.probs, spec.p_gp.probs, spec.p_gn.probs
    p = spec.p
    d_p = _safe_ratio(pp, pp + pgp)
    d_u = _safe_ratio(p, p + spec.p_g_mix)
    d_n = _safe_ratio(pp, pp + pgn)
    return d_p, d_u, d_n


def _pointwise_objective(a: np.ndarray, b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """a*log(d) + b*log(1-d) with the 0*log(0) := 0 convention.

    `a` and `b` are column vectors of densities, `d` a row of candidate
    discriminator values; broadcasting evaluates every (point, value) pair.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        term1 = np.where(a > 0, a * np.log(d), 0.0)
        term2 = np.where(b > 0, b * np.log1p(-d), 0.0)
    return term1 + term2


@dataclass(frozen=True)
class OptimalityReport:
    ok: bool
    max_violation: float
    worst_discriminator: str
    worst_point: int

    def __str__(self) -> str:
        status = "optimal" if self.ok else "NOT optimal"
        return (
            f"{status}: max grid improvement {self.max_violation:.3e} "
            f"({self.worst_discriminator} at support point {self.worst_point})"
        )


def verify_optimality(
    spec: GameSpec,
    candidates: tuple[np.ndarray, np.ndarray, np.ndarray],
    grid_step: float = 1e-3,
    tol: float = 1e-12,
) -> OptimalityReport:
    """Check candidate discriminators against per-point grid search.

    Every support point's objective is independent, so each is maximized by
    scanning d over a (0, 1) grid; a candidate passes if no grid value beats
    it by more than `tol`.
    """
    grid = np.arange(grid_step, 1.0, grid_step)[None, :]
    pairs = {
        "d_p": (spec.p_p.probs, spec.p_gp.probs, candidates[0]),
        "d_u": (spec.p, spec.p_g_mix, candidates[1]),
        "d_n": (spec.p_p.probs, spec.p_gn.probs, candidates[2]),
    }
    worst = -np.inf
    worst_name, worst_point = "d_p", 0
    for name, (a, b, cand) in pairs.items():
        a = a[:, None]
        b = b[:, None]
        grid_best = _pointwise_objective(a, b, grid).max(axis=1)
        cand_val = _pointwise_objective(a, b, np.clip(cand, 0.0, 1.0)[:, None])[:, 0]
        violation = grid_best - cand_val
        k = int(np.argmax(violation))
        if violation[k] > worst:
            worst = float(violation[k])
            worst_name, worst_point = name, k
    return OptimalityReport(ok=worst <= tol, max_violation=worst, worst_discriminator=worst_name, worst_point=worst_point)


def _xlog_ratio(x: np.ndarray, y: np.ndarray) -> float:
    """sum of x*log(x/y) over points with x > 0."""
    mask = x > 0
    return float(np.sum(x[mask] * np.log(x[mask] / y[mask])))


def kl(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Kullback-Leibler divergence in nats; infinite if q misses p's support."""
    pp, qq = p.probs, q.probs
    if np.any((pp > 0) & (qq == 0)):
        return float("inf")
    return _xlog_ratio(pp, qq)


def jsd(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Jensen-Shannon divergence in nats: always finite, in [0, log 2]."""
    m = 0.5 * (p.probs + q.probs)
    return 0.5 * _xlog_ratio(p.probs, m) + 0.5 * _xlog_ratio(q.probs, m)


def _expect_log_ratio(weight: np.ndarray, num: np.ndarray, den: np.ndarray) -> float:
    """sum of weight*log(num/den) over points with weight > 0."""
    mask = weight > 0
    return float(np.sum(weight[mask] * np.log(num[mask] / den[mask])))


def objective_value(spec: GameSpec) -> float:
    """Game objective with every discriminator at its closed-form best response.

    Direct plug-in expansion: each discriminator term becomes an expectation
    of a log density ratio. This route is kept independent of
    `objective_value_jsd`, which must agree with it to 1e-10.
    """
    pp, pgp, pgn = spec.p_p.probs, spec.p_gp.probs, spec.p_gn.probs
    p = spec.p
    mix = spec.p_g_mix

    v_dp = _expect_log_ratio(pp, pp, pp + pgp) + _expect_log_ratio(pgp, pgp, pp + pgp)
    v_du_real = _expect_log_ratio(p, p, p + mix)
    v_du_gp = v_du_real + _expect_log_ratio(pgp, mix, p + mix)
    v_du_gn = v_du_real + _expect_log_ratio(pgn, mix, p + mix)
    v_dn = _expect_log_ratio(pp, pp, pp + pgn) + _expect_log_ratio(pgn, pgn, pp + pgn)

    return spec.pi_p * (spec.lambda_p * v_dp + spec.lambda_u * v_du_gp) + spec.pi_n * (
        spec.lambda_u * v_du_gn - spec.lambda_n * v_dn
    )


def objective_value_jsd(spec: GameSpec) -> float:
    """Same objective written with Jensen-Shannon divergences."""
    mix = DiscreteDistribution(spec.p_g_mix)
    marginal = DiscreteDistribution(spec.p)
    return (
        spec.pi_p * spec.lambda_p * (2.0 * jsd(spec.p_p, spec.p_gp) - LOG4)
        + spec.lambda_u * (2.0 * jsd(marginal, mix) - LOG4)
        - spec.pi_n * spec.lambda_n * (2.0 * jsd(spec.p_p, spec.p_gn) - LOG4)
    )


def simplex_grid(k: int, points_per_axis: int):
    """Yield all pmfs on k points whose entries are multiples of 1/(points_per_axis-1)."""
    if points_per_axis < 2:
        raise ValueError("grid needs at least 2 points per axis")
    r = points_per_axis - 1

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for tail in compositions(total - head, parts - 1):
                yield (head, *tail)

    for comp in compositions(r, k):
        yield np.asarray(comp, dtype=np.float64) / r


@dataclass(frozen=True)
class SearchResult:
    p_gp: DiscreteDistribution
    p_gn: DiscreteDistribution
    value: float


def equilibrium_search(
    p_p: DiscreteDistribution,
    p_n: DiscreteDistribution,
    pi_p: float,
    lambdas: tuple[float, float, float] = (1.0, 1.0, 1.0),
    grid_resolution: int = 51,
) -> SearchResult:
    """Brute-force the generator pair minimizing the optimal-discriminator objective.

    Scans a full simplex grid for both generator pmfs; intended for small
    supports (the grid grows combinatorially). Deterministic: ties keep the
    first minimizer in grid order.
    """
    k = p_p.support_size
    if k > 6:
        raise ValueError("exhaustive search is limited to support size <= 6")
    lam_p, lam_u, lam_n = lambdas
    candidates = [DiscreteDistribution(g) for g in simplex_grid(k, grid_resolution)]
    best = None
    for gp in candidates:
        for gn in candidates:
            spec = GameSpec(p_p, p_n, gp, gn, pi_p, lam_p, lam_u, lam_n)
            val = objective_value(spec)
            if best is None or val < best.value:
                best = SearchResult(gp, gn, val)
    return best
