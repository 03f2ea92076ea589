"""Randomized verification of the finite-space theory oracles.

Backs the `oracle verify` CLI subcommand: draws random game specs and
confirms the closed forms, the two objective routes, and the equilibrium
value against brute force, reporting maximum deviations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import (
    LOG4,
    DiscreteDistribution,
    GameSpec,
    equilibrium_search,
    jsd,
    objective_value,
    objective_value_jsd,
    optimal_discriminators,
    verify_optimality,
)

__all__ = ["VerifyReport", "run_verification", "random_distribution", "random_spec", "random_equilibrium_spec"]

IDENTITY_TOL = 1e-10
EQUILIBRIUM_TOL = 1e-12
JSD_TOL = 1e-12


def random_distribution(rng: np.random.Generator, k: int, allow_zeros: bool = True) -> DiscreteDistribution:
    """Random pmf on k points; sometimes with hard zeros to exercise conventions."""
    w = rng.gamma(1.0, 1.0, k)
    if allow_zeros and k > 1 and rng.random() < 0.3:
        kill = rng.choice(k, size=rng.integers(1, k), replace=False)
        w[kill] = 0.0
        if w.sum() == 0:
            w[rng.integers(k)] = 1.0
    return DiscreteDistribution(w / w.sum())


def random_spec(rng: np.random.Generator, k: int | None = None) -> GameSpec:
    if k is None:
        k = int(rng.integers(2, 7))
    return GameSpec(
        p_p=random_distribution(rng, k),
        p_n=random_distribution(rng, k),
        p_gp=random_distribution(rng, k),
        p_gn=random_distribution(rng, k),
        pi_p=float(rng.uniform(0.05, 0.95)),
        lambda_p=float(rng.uniform(0.0, 2.0)),
        lambda_u=float(rng.uniform(0.1, 2.0)),
        lambda_n=float(rng.uniform(0.0, 2.0)),
    )


def random_equilibrium_spec(rng: np.random.Generator, k: int | None = None) -> GameSpec:
    """Well-separated game at equilibrium: disjoint class supports, generators exact."""
    if k is None:
        k = int(rng.integers(2, 7))
    split = int(rng.integers(1, k))
    w_p = np.zeros(k)
    w_n = np.zeros(k)
    w_p[:split] = rng.gamma(1.0, 1.0, split)
    w_n[split:] = rng.gamma(1.0, 1.0, k - split)
    p_p = DiscreteDistribution(w_p / w_p.sum())
    p_n = DiscreteDistribution(w_n / w_n.sum())
    return GameSpec(
        p_p=p_p,
        p_n=p_n,
        p_gp=p_p,
        p_gn=p_n,
        pi_p=float(rng.uniform(0.05, 0.95)),
        lambda_p=float(rng.uniform(0.0, 2.0)),
        lambda_u=float(rng.uniform(0.1, 2.0)),
        lambda_n=float(rng.uniform(0.0, 2.0)),
    )


@dataclass
class VerifyReport:
    trials: int
    seed: int
    identity_max_dev: float = 0.0
    equilibrium_max_dev: float = 0.0
    optimality_max_violation: float = 0.0
    jsd_max_asymmetry: float = 0.0
    jsd_range_ok: bool = True
    search_ok: bool = True

    @property
    def ok(self) -> bool:
        return (
            self.identity_max_dev <= IDENTITY_TOL
            and self.equilibrium_max_dev <= EQUILIBRIUM_TOL
            and self.optimality_max_violation <= 1e-12
            and self.jsd_max_asymmetry <= JSD_TOL
            and self.jsd_range_ok
            and self.search_ok
        )

    def lines(self) -> list[str]:
        def mark(passed):
            return "pass" if passed else "FAIL"

        return [
            f"objective expansion vs divergence form : max dev {self.identity_max_dev:.3e} "
            f"[{mark(self.identity_max_dev <= IDENTITY_TOL)}] (tol {IDENTITY_TOL:g}, {self.trials} specs)",
            f"equilibrium value -(pi_p*l_p+l_u)*log4  : max dev {self.equilibrium_max_dev:.3e} "
            f"[{mark(self.equilibrium_max_dev <= EQUILIBRIUM_TOL)}] (tol {EQUILIBRIUM_TOL:g})",
            f"closed-form discriminators vs grid     : max improvement {self.optimality_max_violation:.3e} "
            f"[{mark(self.optimality_max_violation <= 1e-12)}] (grid step 1e-3)",
            f"jsd symmetry                           : max asymmetry {self.jsd_max_asymmetry:.3e} "
            f"[{mark(self.jsd_max_asymmetry <= JSD_TOL)}]",
            f"jsd range [0, log 2]                   : [{mark(self.jsd_range_ok)}]",
            f"brute-force search recovers equilibrium: [{mark(self.search_ok)}]",
        ]


def run_verification(trials: int = 1000, seed: int = 0, inject_fault: bool = False) -> VerifyReport:
    """Run the full randomized oracle suite; `inject_fault` exists to test failure paths."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    report = VerifyReport(trials=trials, seed=seed)

    for _ in range(trials):
        spec = random_spec(rng)
        dev = abs(objective_value(spec) - objective_value_jsd(spec))
        report.identity_max_dev = max(report.identity_max_dev, dev)

    for _ in range(min(trials, 100)):
        spec = random_equilibrium_spec(rng)
        expected = -(spec.pi_p * spec.lambda_p + spec.lambda_u) * LOG4
        dev = abs(objective_value(spec) - expected)
        report.equilibrium_max_dev = max(report.equilibrium_max_dev, dev)

    for _ in range(min(trials, 100)):
        spec = random_spec(rng)
        result = verify_optimality(spec, optimal_discriminators(spec), grid_step=1e-3)
        report.optimality_max_violation = max(report.optimality_max_violation, result.max_violation)

    for _ in range(min(trials, 200)):
        k = int(rng.integers(2, 7))
        p = random_distribution(rng, k)
        q = random_distribution(rng, k)
        a, b = jsd(p, q), jsd(q, p)
        report.jsd_max_asymmetry = max(report.jsd_max_asymmetry, abs(a - b))
        if not -1e-15 <= a <= np.log(2.0) + 1e-15:
            report.jsd_range_ok = False

    p_p = DiscreteDistribution(np.array([1.0, 0.0]))
    p_n = DiscreteDistribution(np.array([0.0, 1.0]))
    found = equilibrium_search(p_p, p_n, pi_p=0.5, grid_resolution=21)
    report.search_ok = (
        float(np.max(np.abs(found.p_gp.probs - p_p.probs))) <= 0.05
        and float(np.max(np.abs(found.p_gn.probs - p_n.probs))) <= 0.05
    )

    if inject_fault:
        report.identity_max_dev = 1.0
    return report
