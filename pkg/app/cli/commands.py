"""One function per command; each returns a Report and leaves exit codes to main."""

import json
import logging
import re
from pathlib import Path
from typing import Any, Optional, Sequence

from app.cli.ledger import AssertionLedger
from app.exceptions import (
    DomainError,
    InfeasibleError,
    InputError,
    NonSubmodularError,
)
from app.instances import (
    build_game,
    build_problem,
    dump_document,
    dump_game,
    dump_problem,
    load_instance,
)
from app.instances.loader import LoadedInstance
from app.schemas.instances import GameFile, ProblemFile
from app.schemas.reports import Report, ReportStatus
from app.services import counterexample, game, optimize, oracle, selftest
from app.services import rank as rank_fns
from app.services.cost import CostFunction, is_discrete_convex, is_regular
from app.services.exact import format_exact
from app.services.polytope import Allocation, l1_distance
from app.services.rank import GroundSet, RankFunction

logger = logging.getLogger(__name__)

SHIFT_PATTERN = re.compile(r"^(?P<label>.+?)(?P<sign>[+-])(?P<amount>\d+)$")


# =============================================================================
# HELPERS
# =============================================================================


def _load_problem(path: Path) -> tuple[LoadedInstance, optimize.ProblemInstance]:
    loaded = load_instance(path)
    if not isinstance(loaded.document, ProblemFile):
        raise InputError(f"{path} is a {loaded.document.kind} file; this command needs a problem")
    return loaded, build_problem(loaded.document)


def _load_game(path: Path) -> tuple[LoadedInstance, game.Game]:
    loaded = load_instance(path)
    if not isinstance(loaded.document, GameFile):
        raise InputError(f"{path} is a {loaded.document.kind} file; this command needs a game")
    return loaded, build_game(loaded.document)


def _labelled(x: Allocation, ground: GroundSet) -> dict[str, int]:
    return dict(zip(ground.labels, x))


def _labels(ground: GroundSet, elements) -> list[str]:
    return [ground.labels[e] for e in sorted(elements)]


def _require_submodular(f: RankFunction, owner: str) -> None:
    check = rank_fns.is_submodular(f)
    if not check.holds:
        S, T = check.witness
        raise NonSubmodularError(
            f"{owner} has a non-submodular rank function (S={_labels(f.ground, S)}, "
            f"T={_labels(f.ground, T)}); run the counterexample command instead",
            witness=check.witness,
        )


def parse_shift(text: str, ground: GroundSet) -> tuple[int, int]:
    """Parse "LABEL+N" or "LABEL-N" into (element index, signed amount)."""
    match = SHIFT_PATTERN.match(text.strip())
    if not match:
        raise InputError(f"Invalid shift {text!r}; expected LABEL+N or LABEL-N")
    amount = int(match["amount"])
    return ground.index(match["label"]), amount if match["sign"] == "+" else -amount


def _report(
    command: str,
    arguments: dict[str, Any],
    ledger: AssertionLedger,
    result: dict[str, Any],
    loaded: Optional[LoadedInstance] = None,
    trace: Any = None,
    status: ReportStatus = ReportStatus.OK,
) -> Report:
    return Report(
        command=command,
        arguments=arguments,
        input_digest=loaded.digest if loaded else None,
        status=ledger.status(status),
        result=result,
        assertions=ledger.to_list(),
        trace=trace,
    )


# =============================================================================
# SOLVE AND REOPTIMIZE
# =============================================================================


def cmd_solve(
    path: Path,
    use_oracle: bool = False,
    budget: Optional[oracle.EnumerationBudget] = None,
    with_path: bool = False,
) -> Report:
    """Greedy optimum (or brute-force optimum with use_oracle), always verified locally."""
    loaded, P = _load_problem(path)
    _require_submodular(P.f, "Problem")
    P.ensure_regular()
    ledger = AssertionLedger()
    ground = P.f.ground

    if use_oracle:
        x, _ = oracle.brute_optimum(P, budget)
    else:
        x = optimize.solve(P)
    ledger.record("member", P.polytope.member(x), f"x in B_f({P.d})")
    check = optimize.verify_optimal(P, x)
    detail = "" if check.optimal else f"improving exchange at {ground.labels[check.violating_element]}"
    ledger.record("verify_optimal", check.optimal, detail)

    result: dict[str, Any] = {
        "allocation": _labelled(x, ground),
        **optimize.objective_summary(P, x),
    }
    if with_path and not use_oracle:
        path_points = optimize.solve_demand_path(P)
        ledger.record(
            "demand_path_unit_steps",
            all(l1_distance(a, b) == 1 for a, b in zip(path_points, path_points[1:])),
        )
        result["demand_path"] = [list(point) for point in path_points]
    logger.info(f"Solved {path} with objective {result['objective']}")
    return _report(
        "solve",
        {"file": str(path), "oracle": use_oracle, "path": with_path},
        ledger,
        result,
        loaded,
    )


def cmd_reopt(
    path: Path,
    shifts: Sequence[str] = (),
    demand: Optional[int] = None,
) -> Report:
    """Solve, then move the optimum to the shifted parameters by unit steps."""
    loaded, P = _load_problem(path)
    _require_submodular(P.f, "Problem")
    ground = P.f.ground
    t_target = list(P.t)
    for text in shifts:
        e, amount = parse_shift(text, ground)
        t_target[e] += amount
        if t_target[e] < 0:
            raise DomainError(f"Shift {text} makes t_{ground.labels[e]} negative")
    d_target = P.d if demand is None else demand
    P.with_d(max(P.d, d_target)).ensure_regular(extra_t=max(0, max(t_target) - max(P.t)) + 1)

    ledger = AssertionLedger()
    x = optimize.solve(P)
    outcome = optimize.reoptimize_general(P, x, t_target, d_target)
    dt = sum(abs(a - b) for a, b in zip(P.t, t_target))
    dd = abs(P.d - d_target)
    distance = l1_distance(x, outcome.allocation)

    final = optimize.verify_optimal(outcome.instance, outcome.allocation)
    ledger.record("verify_optimal", final.optimal)
    ledger.record_bound("distance_bound", distance, 2 * dt + dd)
    ledger.record_bound("trace_length_bound", len(outcome.trace), dt + dd)
    if dt == 1 and dd == 0:
        ledger.record_bound("unit_parameter_shift", distance, 2)
    if dt == 0 and dd == 1:
        ledger.record_bound("unit_demand_shift", distance, 1)

    result = {
        "t": list(P.t),
        "t_target": t_target,
        "demand": P.d,
        "demand_target": d_target,
        "initial": _labelled(x, ground),
        "initial_objective": format_exact(P.objective(x)),
        "allocation": _labelled(outcome.allocation, ground),
        **optimize.objective_summary(outcome.instance, outcome.allocation),
        "distance": distance,
        "distance_bound": 2 * dt + dd,
        "steps": len(outcome.trace),
        "fallbacks": outcome.fallbacks,
    }
    return _report(
        "reopt",
        {"file": str(path), "shifts": list(shifts), "demand": demand},
        ledger,
        result,
        loaded,
        trace=outcome.trace.to_list(ground.labels),
    )


# =============================================================================
# EQUILIBRIA
# =============================================================================


def _player_costs(G: game.Game, x: game.StrategyProfile) -> dict[str, str]:
    return {p.name: format_exact(game.private_cost(G, x, i)) for i, p in enumerate(G.players)}


def _check_game(G: game.Game) -> None:
    for p in G.players:
        if p.demand > p.f.total:
            raise InfeasibleError(f"Player {p.name}: demand {p.demand} exceeds f(E)={p.f.total}")
    errors = G.validation_errors()
    if errors:
        raise InputError("; ".join(errors))


def cmd_pne(
    path: Path,
    use_oracle: bool = False,
    budget: Optional[oracle.EnumerationBudget] = None,
    full_trace: bool = False,
) -> Report:
    """Equilibrium by the incremental algorithm, or by exhaustive search with use_oracle."""
    loaded, G = _load_game(path)
    _check_game(G)
    ledger = AssertionLedger()
    arguments = {"file": str(path), "oracle": use_oracle, "trace": full_trace}

    if use_oracle:
        search = oracle.brute_pne_search(G, budget)
        result: dict[str, Any] = {
            "profiles_examined": search.profiles_examined,
            "strategy_counts": list(search.strategy_counts),
        }
        if search.profile is None:
            result["profile"] = None
            return _report("pne", arguments, ledger, result, loaded, status=ReportStatus.ABSENT)
        x = game.StrategyProfile(search.profile)
        result.update(profile=x.to_dict(G), costs=_player_costs(G, x))
        return _report("pne", arguments, ledger, result, loaded)

    for p in G.players:
        _require_submodular(p.f, f"Player {p.name}")
    x, log = game.compute_pne(G)
    verdict = game.is_pne(G, x, budget=budget)
    ledger.record(
        "is_pne",
        verdict.is_pne,
        "" if verdict.is_pne else f"{G.players[verdict.player].name} improves",
    )
    ledger.record_bound("total_steps_bound", log.while_steps, log.total_bound)
    summary = log.to_dict(G, full=full_trace)
    ledger.record_bound("stage_steps_bound", summary["max_stage_steps"], log.stage_bound)
    game.replay_run_log(G, log)
    ledger.record("replay", True)

    result = {
        "profile": x.to_dict(G),
        "costs": _player_costs(G, x),
        "for_iterations": summary["for_iterations"],
        "while_steps": summary["while_steps"],
        "stage_bound": log.stage_bound,
        "total_bound": log.total_bound,
    }
    return _report("pne", arguments, ledger, result, loaded, trace=summary["iterations"])


# =============================================================================
# PROPERTY BATTERY
# =============================================================================


def _rank_checks(f: RankFunction) -> dict[str, Any]:
    ground = f.ground
    monotone = rank_fns.is_monotone_normalized(f)
    submodular = rank_fns.is_submodular(f)
    positive = rank_fns.is_strictly_positive(f)
    entry: dict[str, Any] = {
        "kind": f.kind.value,
        "normalized_monotone": monotone.holds,
        "submodular": submodular.holds,
        "strictly_positive": positive.holds,
    }
    if not monotone.holds:
        entry["monotone_witness"] = [_labels(ground, U) for U in monotone.witness]
    if not submodular.holds:
        S, T = submodular.witness
        entry["submodular_witness"] = {"S": _labels(ground, S), "T": _labels(ground, T)}
    return entry


def _cost_checks(
    costs: Sequence[CostFunction], labels: Sequence[str], x_max: int, t_max: int
) -> dict[str, Any]:
    checks = {}
    for label, C in zip(labels, costs):
        entry: dict[str, Any] = {"family": C.family.value}
        try:
            regular = is_regular(C, x_max, t_max)
            entry["regular"] = regular.regular
            if not regular.regular:
                entry["condition"] = regular.condition
                entry["witness"] = list(regular.witness)
            entry["discrete_convex"] = is_discrete_convex(C, x_max, t_max)
        except DomainError as e:
            entry.update(regular=False, error=str(e))
        checks[label] = entry
    return checks


def cmd_check(path: Path) -> Report:
    """Submodularity, monotonicity and regularity on each cost's operational box."""
    loaded = load_instance(path)
    document = loaded.document
    ledger = AssertionLedger()
    if isinstance(document, ProblemFile):
        P = build_problem(document)
        x_max, t_max = max(P.d, 1), max(P.t) + 1
        rank = _rank_checks(P.f)
        costs = _cost_checks(P.costs, P.f.ground.labels, x_max, t_max)
        result: dict[str, Any] = {
            "kind": "problem",
            "box": {"x_max": x_max, "t_max": t_max},
            "rank": rank,
            "costs": costs,
            "polymatroid": rank["normalized_monotone"] and rank["submodular"],
            "regular": all(c["regular"] for c in costs.values()),
        }
    else:
        G = build_game(document)
        total = sum(G.demands)
        players = {}
        for p in G.players:
            x_max, t_max = max(p.demand, 1), total - p.demand + 1
            players[p.name] = {
                "box": {"x_max": x_max, "t_max": t_max},
                "rank": _rank_checks(p.f),
                "costs": _cost_checks(p.costs, G.resources.labels, x_max, t_max),
            }
        result = {
            "kind": "game",
            "players": players,
            "polymatroid": all(
                e["rank"]["normalized_monotone"] and e["rank"]["submodular"] for e in players.values()
            ),
            "regular": all(
                c["regular"] for e in players.values() for c in e["costs"].values()
            ),
        }
    return _report("check", {"file": str(path)}, ledger, result, loaded)


# =============================================================================
# COUNTEREXAMPLES
# =============================================================================


def _emit(document: dict, path: Path, ledger: AssertionLedger, rebuild) -> str:
    dump_document(document, path)
    reloaded = load_instance(path).document
    ledger.record(f"round_trip:{path.name}", rebuild(reloaded) == document)
    return path.name


def cmd_counterexample(
    path: Path,
    emit_dir: Optional[Path] = None,
    budget: Optional[oracle.EnumerationBudget] = None,
) -> Report:
    """Sensitivity counterexample and equilibrium-free game for a non-submodular f."""
    loaded, P = _load_problem(path)
    f = P.f
    ledger = AssertionLedger()
    sensitivity = counterexample.build_sensitivity_counterexample(f, budget)
    no_pne = counterexample.build_no_pne_game(f, budget)

    ledger.record_equal("parameter_shift_distance", sensitivity.parameter_distance, 4)
    ledger.record_equal("demand_shift_distance", sensitivity.demand_distance, 3)
    ledger.record("no_pne", no_pne.search.profile is None, f"{no_pne.search.profiles_examined} profiles")

    result: dict[str, Any] = {
        "sensitivity": sensitivity.to_dict(),
        "game": no_pne.to_dict(),
    }
    if emit_dir is not None:
        emit_dir = Path(emit_dir)
        emit_dir.mkdir(parents=True, exist_ok=True)
        stem = Path(path).stem

        def rebuild_problem(document):
            return dump_problem(build_problem(document))

        emitted = [
            _emit(
                dump_problem(sensitivity.instance),
                emit_dir / f"{stem}.sensitivity.yaml",
                ledger,
                rebuild_problem,
            ),
            _emit(
                dump_problem(sensitivity.instance.with_t(sensitivity.t_shifted)),
                emit_dir / f"{stem}.sensitivity_shifted.yaml",
                ledger,
                rebuild_problem,
            ),
            _emit(
                dump_game(no_pne.game),
                emit_dir / f"{stem}.no_pne_game.yaml",
                ledger,
                lambda document: dump_game(build_game(document)),
            ),
        ]
        certificate = emit_dir / f"{stem}.certificate.json"
        certificate.write_text(
            json.dumps(result, indent=2) + "\n",
            encoding="utf-8",
        )
        result["emitted"] = emitted + [certificate.name]
    return _report(
        "counterexample",
        {"file": str(path), "emit_dir": str(emit_dir) if emit_dir else None},
        ledger,
        result,
        loaded,
    )


# =============================================================================
# SELF-TEST
# =============================================================================


def cmd_selftest(
    seed: int,
    budget: Optional[oracle.EnumerationBudget] = None,
    counts: Optional[dict[str, int]] = None,
) -> Report:
    """Randomized oracle-equivalence sweep; one assertion per sweep."""
    ledger = AssertionLedger()
    summaries = selftest.run_selftest(seed, budget, counts)
    for summary in summaries:
        detail = f"{summary.checks} checks, {len(summary.failures)} failures"
        ledger.record(summary.name, summary.passed, detail)
    return _report(
        "selftest",
        {"seed": seed, "counts": counts or {}},
        ledger,
        {summary.name: summary.to_dict() for summary in summaries},
    )
