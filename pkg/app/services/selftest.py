"""Randomized oracle-equivalence sweep.

Each check draws its instance from `random.Random(f"{seed}:{sweep}:{index}")`,
so a single failing case can be reproduced in isolation.
"""

from __future__ import annotations

import asyncio
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from app.config import settings
from app.exceptions import NonSubmodularError, PolymatroidError
from app.services import counterexample, cost, game, generators, optimize, oracle
from app.services.polytope import l1_distance

logger = logging.getLogger(__name__)

# One semaphore per event loop to limit concurrent checks
_check_semaphores: dict[int, asyncio.Semaphore] = {}


def _get_semaphore() -> asyncio.Semaphore:
    loop_id = id(asyncio.get_running_loop())
    if loop_id not in _check_semaphores:
        _check_semaphores.clear()
        _check_semaphores[loop_id] = asyncio.Semaphore(settings.MAX_CONCURRENT_INSTANCES)
    return _check_semaphores[loop_id]


@dataclass
class CheckOutcome:
    sweep: str
    index: int
    passed: bool
    detail: str = ""


@dataclass
class SweepSummary:
    name: str
    checks: int = 0
    failures: list[CheckOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "checks": self.checks,
            "failures": [{"index": f.index, "detail": f.detail} for f in self.failures],
        }


def _rng(seed: int, sweep: str, index: int) -> random.Random:
    return random.Random(f"{seed}:{sweep}:{index}")


# =============================================================================
# INDIVIDUAL CHECKS (return a failure message or None)
# =============================================================================


def check_solve(rng: random.Random, budget: oracle.EnumerationBudget) -> Optional[str]:
    P = generators.random_instance(rng)
    x = optimize.solve(P)
    _, best = oracle.brute_optimum(P, budget)
    if P.objective(x) != best:
        return f"greedy objective {P.objective(x)} != brute force {best}"
    if not optimize.verify_optimal(P, x).optimal:
        return f"greedy solution {x} fails the optimality test"
    return None


def check_characterization(rng: random.Random, budget: oracle.EnumerationBudget) -> Optional[str]:
    P = generators.random_instance(rng)
    points = oracle.enumerate_base(P.polytope, budget)
    if len(points) > 200:
        return None
    _, best = oracle.brute_optimum(P, budget)
    for x in points:
        local = optimize.verify_optimal(P, x).optimal
        if local != (P.objective(x) == best):
            return f"optimality test says {local} at {x}, objective {P.objective(x)} vs {best}"
    return None


def check_shift(rng: random.Random, budget: oracle.EnumerationBudget) -> Optional[str]:
    P = generators.random_instance(rng, max_demand=4)
    x = optimize.solve(P)
    m = P.size
    scenario = rng.choice(("t_up", "t_down", "d_up", "d_down", "general"))
    t_new, d_new = list(P.t), P.d
    if scenario == "t_up":
        t_new[rng.randrange(m)] += 1
    elif scenario == "t_down":
        positive = [e for e in range(m) if P.t[e] > 0]
        if not positive:
            return None
        t_new[rng.choice(positive)] -= 1
    elif scenario == "d_up":
        if P.d + 1 > P.f.total:
            return None
        d_new += 1
    elif scenario == "d_down":
        if P.d == 0:
            return None
        d_new -= 1
    else:
        for _ in range(rng.randint(1, 3)):
            e = rng.randrange(m)
            t_new[e] = max(0, t_new[e] + rng.choice((-1, 1)))
        d_new = rng.randint(0, min(4, P.f.total))
    result = optimize.reoptimize_general(P, x, t_new, d_new)
    dt = sum(abs(a - b) for a, b in zip(P.t, t_new))
    dd = abs(P.d - d_new)
    distance = l1_distance(x, result.allocation)
    if distance > 2 * dt + dd:
        return f"{scenario}: distance {distance} exceeds 2*{dt}+{dd}"
    if len(result.trace) > dt + dd:
        return f"{scenario}: trace of {len(result.trace)} steps exceeds {dt}+{dd}"
    _, best = oracle.brute_optimum(result.instance, budget)
    if result.instance.objective(result.allocation) != best:
        return f"{scenario}: reoptimized objective differs from brute force {best}"
    return None


def check_game(rng: random.Random, budget: oracle.EnumerationBudget) -> Optional[str]:
    G = generators.random_game(rng)
    profile, log = game.compute_pne(G)
    verdict = game.is_pne(G, profile, exhaustive=True, budget=budget)
    if not verdict.is_pne:
        return f"player {verdict.player} improves on the computed profile"
    if log.while_steps > log.total_bound:
        return f"{log.while_steps} steps exceed the bound {log.total_bound}"
    if any(len(it.while_steps) > log.stage_bound for it in log.iterations):
        return f"a stage exceeds {log.stage_bound} steps"
    game.replay_run_log(G, log)
    return None


def check_counterexample(rng: random.Random, budget: oracle.EnumerationBudget, index: int) -> Optional[str]:
    f = (
        generators.canonical_nonsubmodular()
        if index == 0
        else generators.random_nonsubmodular_rank(rng, rng.randint(4, 6))
    )
    sensitivity = counterexample.build_sensitivity_counterexample(f, budget)
    if (sensitivity.parameter_distance, sensitivity.demand_distance) != (4, 3):
        return "unexpected sensitivity distances"
    no_pne = counterexample.build_no_pne_game(f, budget)
    if no_pne.search.profile is not None:
        return "constructed game has an equilibrium"
    try:
        game.compute_pne(no_pne.game)
    except NonSubmodularError:
        return None
    return "equilibrium algorithm accepted a non-submodular game"


def check_dichotomy(rng: random.Random, budget: oracle.EnumerationBudget, index: int) -> Optional[str]:
    m = rng.randint(4, 5)
    submodular = index % 2 == 0
    f = (
        generators.random_submodular_rank(rng, m, "coverage")
        if submodular
        else generators.random_nonsubmodular_rank(rng, m)
    )
    d = min(2, f.total)
    players = tuple(
        game.Player(f"p{i + 1}", d, f, tuple(generators.random_cost(rng) for _ in range(m)))
        for i in range(2)
    )
    G = game.Game(f.ground, players)
    pne_ok = counter_ok = True
    try:
        game.compute_pne(G)
    except NonSubmodularError:
        pne_ok = False
    try:
        counterexample.build_no_pne_game(f, budget)
    except PolymatroidError:
        counter_ok = False
    if pne_ok == counter_ok:
        return f"equilibrium={pne_ok} counterexample={counter_ok} for submodular={submodular}"
    return None


def check_regularity(rng: random.Random, budget: oracle.EnumerationBudget) -> Optional[str]:
    family = rng.choice(("mm1", "scaled_congestion", "matroid_binary"))
    if family == "mm1":
        C = cost.mm1(rng.randint(1, 6))
    elif family == "scaled_congestion":
        C = cost.scaled_congestion(generators.random_congestion(rng))
    else:
        C = cost.matroid_binary(generators.random_congestion(rng))
    check = cost.is_regular(C, 6, 6)
    if not check.regular:
        return f"{family} not regular at {check.witness}"
    if not cost.is_discrete_convex(C, 6, 6):
        return f"{family} regular but not discrete convex"
    return None


SWEEPS: dict[str, tuple[Callable, str]] = {
    "solve": (check_solve, "SELFTEST_INSTANCES"),
    "characterization": (check_characterization, "SELFTEST_INSTANCES"),
    "shifts": (check_shift, "SELFTEST_SHIFT_SCENARIOS"),
    "games": (check_game, "SELFTEST_GAMES"),
    "counterexamples": (check_counterexample, "SELFTEST_NONSUBMODULAR"),
    "dichotomy": (check_dichotomy, "SELFTEST_NONSUBMODULAR"),
    "regularity": (check_regularity, "SELFTEST_NONSUBMODULAR"),
}
INDEXED = {"counterexamples", "dichotomy"}


def run_check(sweep: str, seed: int, index: int, budget: oracle.EnumerationBudget) -> CheckOutcome:
    fn, _ = SWEEPS[sweep]
    rng = _rng(seed, sweep, index)
    try:
        message = fn(rng, budget, index) if sweep in INDEXED else fn(rng, budget)
    except PolymatroidError as e:
        message = f"{type(e).__name__}: {e}"
    if message:
        logger.warning(f"Self-test {sweep}[{index}] failed: {message}")
    return CheckOutcome(sweep, index, message is None, message or "")


async def _run_one(sweep: str, seed: int, index: int, budget) -> CheckOutcome:
    async with _get_semaphore():
        return await asyncio.to_thread(run_check, sweep, seed, index, budget)


async def run_selftest_async(
    seed: int,
    budget: Optional[oracle.EnumerationBudget] = None,
    counts: Optional[dict[str, int]] = None,
) -> list[SweepSummary]:
    """Run every sweep; results are ordered by sweep and index."""
    budget = budget or oracle.EnumerationBudget()
    summaries = []
    for sweep, (_, setting) in SWEEPS.items():
        total = (counts or {}).get(sweep, getattr(settings, setting))
        outcomes = await asyncio.gather(
            *(_run_one(sweep, seed, index, budget) for index in range(total))
        )
        summary = SweepSummary(sweep, checks=len(outcomes))
        summary.failures = [o for o in outcomes if not o.passed]
        logger.info(f"Sweep {sweep}: {summary.checks} checks, {len(summary.failures)} failures")
        summaries.append(summary)
    return summaries


def run_selftest(
    seed: int,
    budget: Optional[oracle.EnumerationBudget] = None,
    counts: Optional[dict[str, int]] = None,
) -> list[SweepSummary]:
    return asyncio.run(run_selftest_async(seed, budget, counts))
