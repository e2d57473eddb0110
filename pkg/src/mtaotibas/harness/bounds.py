"""Numeric validation of the success-probability bound.

The challenger's success probability against an adversary with advantage
eps decomposes as (no abort during queries) * (forgery lands) * (coin
pattern holds), giving

    f(delta) = (1 - delta)^(q_C + q_E + q_S + n) * delta^2

times eps. Maximizing over delta must dominate the closed-form bound
4 / (e^2 (q_C + q_E + q_S + n + 2)^2); the optimizer is
delta* = 2 / (q_C + q_E + q_S + n + 2). bound_check establishes the
inequality in exact rational arithmetic (using a rational lower bound on
e^2 tight to 20 digits); monte_carlo_abort estimates the no-abort
probability empirically.
"""

import math
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import List, Optional

from ..pairing import get_engine
from .challenger import Challenger, CoCDHInstance
from .workload import abort_workload, run_workload

# e^2 = 7.3890560989306502272304274605750078131... (truncated -> lower bound)
E_SQUARED_LOWER = Fraction(73890560989306502272, 10**19)


def optimal_delta(q_c: int, q_e: int, q_s: int, n: int) -> float:
    """The delta maximizing the bound, 2/(q_C+q_E+q_S+n+2)."""
    return 2.0 / (q_c + q_e + q_s + n + 2)


def success_probability(delta: Fraction, budget: int) -> Fraction:
    """(1-delta)^budget * delta^2, exactly."""
    return (1 - delta) ** budget * delta**2


def bound_rhs_upper(budget: int) -> Fraction:
    """A rational upper bound on 4/(e^2 (budget+2)^2): anything >= this is
    >= the true right-hand side."""
    return Fraction(4) / (E_SQUARED_LOWER * (budget + 2) ** 2)


def bound_check(q_c: int, q_e: int, q_s: int, n: int, grid: int = 512) -> dict:
    """Evaluate max_delta f(delta) against the closed-form bound.

    A float scan over a fine grid locates the maximum; the decisive
    comparison re-evaluates the best candidates (the grid argmax and the
    closed-form optimizer) as exact rationals against a rational upper
    bound on the right-hand side, so a pass is a proof of the inequality.
    """
    budget = q_c + q_e + q_s + n
    candidates: List[Fraction] = []
    if budget > 0:
        candidates.append(Fraction(2, budget + 2))
    best_grid, best_val = None, -1.0
    for k in range(1, grid):
        d = k / grid
        v = (1.0 - d) ** budget * d * d
        if v > best_val:
            best_grid, best_val = k, v
    candidates.append(Fraction(best_grid, grid))
    exact = {c: success_probability(c, budget) for c in candidates}
    lhs = max(exact.values())
    rhs_upper = bound_rhs_upper(budget)
    return {
        "q_c": q_c,
        "q_e": q_e,
        "q_s": q_s,
        "n": n,
        "delta_star": float(candidates[0]) if budget > 0 else 1.0,
        "lhs_max": float(lhs),
        "rhs": 4.0 / (math.e**2 * (budget + 2) ** 2),
        "holds": lhs >= rhs_upper,
    }


def _mc_worker(args) -> int:
    backend, delta, ops, seed, lo, hi = args
    engine = get_engine(backend)
    survived = 0
    for t in range(lo, hi):
        rng = random.Random((seed << 24) ^ t)
        ch = Challenger(engine, CoCDHInstance.random(engine, rng), delta, rng)
        if not run_workload(ch, ops)["aborted"]:
            survived += 1
    return survived


def monte_carlo_abort(delta: float, q_c: int, q_e: int, q_s: int,
                      trials: int = 100_000, seed: int = 0,
                      backend: str = "mock", jobs: Optional[int] = None) -> dict:
    """Empirical Pr[no abort] for the standard workload, with a 99%
    normal-approximation confidence interval and the claimed lower bound
    (1-delta)^(q_C+q_E+q_S)."""
    ops = abort_workload(q_c, q_e, q_s)
    jobs = jobs or min(8, __import__("os").cpu_count() or 1)
    chunk = (trials + jobs - 1) // jobs
    ranges = [(backend, delta, ops, seed, lo, min(lo + chunk, trials))
              for lo in range(0, trials, chunk)]
    if jobs == 1 or trials < 2000:
        survived = sum(_mc_worker(a) for a in ranges)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            survived = sum(pool.map(_mc_worker, ranges))
    estimate = survived / trials
    half_width = 2.5758 * math.sqrt(max(estimate * (1 - estimate), 1e-12) / trials)
    bound = (1 - delta) ** (q_c + q_e + q_s)
    return {
        "delta": delta,
        "q_c": q_c,
        "q_e": q_e,
        "q_s": q_s,
        "trials": trials,
        "no_abort": survived,
        "estimate": estimate,
        "ci99_half_width": half_width,
        "bound": bound,
        "passes": estimate >= bound - half_width,
    }
