"""Tests for polymatroid games and the equilibrium algorithm."""

import random

import pytest

from app.exceptions import ConstructionError, InfeasibleError, NonSubmodularError
from app.services import game as game_fns
from app.services import generators, oracle
from app.services import rank as rank_fns
from app.services.cost import Congestion, scaled_congestion
from app.services.game import Game, Player, StrategyProfile
from app.services.rank import GroundSet


# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def resources():
    return GroundSet(("r1", "r2", "r3"))


@pytest.fixture
def singleton_game(resources):
    """Two players splitting two units each over two of three resources."""
    linear = scaled_congestion(Congestion.linear(1))
    steep = scaled_congestion(Congestion.linear(2))
    p1 = Player(
        "p1", 2, rank_fns.singleton_cover(resources, ["r1", "r2"], 2), (linear, steep, linear)
    )
    p2 = Player("p2", 2, rank_fns.singleton_cover(resources, ["r1", "r3"], 2), (linear,) * 3)
    return Game(resources, (p1, p2))


@pytest.fixture
def zero_demand_game(resources):
    linear = scaled_congestion(Congestion.linear(1))
    players = tuple(
        Player(name, 0, rank_fns.uniform(resources, 1), (linear,) * 3) for name in ("p1", "p2")
    )
    return Game(resources, players)


# =============================================================================
# PROFILE AND COST TESTS
# =============================================================================


class TestProfiles:
    """Tests for strategy profiles and private costs."""

    def test_loads_and_others(self):
        """Test aggregate and residual loads."""
        x = StrategyProfile(((1, 1, 0), (2, 0, 0)))
        assert x.loads() == (3, 1, 0)
        assert x.others(0) == (2, 0, 0)
        assert x.replace(1, (0, 0, 2)).loads() == (1, 1, 2)

    def test_private_cost(self, singleton_game):
        """Test pi_i sums c_e(x_e) * x_{i,e} over the player's resources."""
        x = StrategyProfile(((1, 1, 0), (1, 0, 1)))
        assert game_fns.private_cost(singleton_game, x, 0) == 2 + 2
        assert game_fns.private_cost(singleton_game, x, 1) == 2 + 1
        assert game_fns.private_cost_breakdown(singleton_game, x, 0) == {"r1": 2, "r2": 2}
        assert x.to_dict(singleton_game) == {"p1": {"r1": 1, "r2": 1}, "p2": {"r1": 1, "r3": 1}}

    def test_is_pne_finds_improvement(self, singleton_game):
        """Test a player stacking on the steep resource can improve."""
        x = StrategyProfile(((0, 2, 0), (1, 0, 1)))
        check = game_fns.is_pne(singleton_game, x)
        assert not check.is_pne
        assert check.player == 0
        local = game_fns.is_pne(singleton_game, x, exhaustive=False)
        assert not local.is_pne
        assert local.player == 0

    def test_best_response(self, singleton_game):
        """Test the greedy best response against fixed opponents."""
        x = StrategyProfile(((0, 0, 0), (2, 0, 0)))
        assert game_fns.best_response(singleton_game, x, 0) == (1, 1, 0)


# =============================================================================
# ALGORITHM TESTS
# =============================================================================


class TestComputePne:
    """Tests for the incremental equilibrium algorithm."""

    def test_zero_demands(self, zero_demand_game):
        """Test the empty profile is returned without iterations."""
        x, log = game_fns.compute_pne(zero_demand_game)
        assert x == StrategyProfile.zeros(zero_demand_game)
        assert log.iterations == []
        assert log.total_bound == 0

    def test_singleton_game(self, singleton_game):
        """Test the result is an equilibrium and the log replays."""
        x, log = game_fns.compute_pne(singleton_game)
        assert game_fns.is_pne(singleton_game, x, exhaustive=True)
        assert len(log.iterations) == 4
        assert log.stage_bound == 3 * 4 + 3 * 4
        assert log.total_bound == 4 * 3 * 8
        assert log.while_steps <= log.total_bound
        assert game_fns.replay_run_log(singleton_game, log) == x
        summary = log.to_dict(singleton_game, full=True)
        assert summary["for_iterations"] == 4
        assert [it["player"] for it in summary["iterations"]] == ["p1", "p1", "p2", "p2"]

    def test_potential_decreases(self, singleton_game):
        """Test every recorded move lowers the sorted marginal vector."""
        _, log = game_fns.compute_pne(singleton_game)
        for iteration in log.iterations:
            for step in iteration.while_steps:
                assert step.potential_after < step.potential_before

    def test_rejects_non_submodular(self):
        """Test games over a non-submodular rank function are refused."""
        f = generators.canonical_nonsubmodular()
        costs = tuple(scaled_congestion(Congestion.linear(1)) for _ in range(4))
        G = Game(f.ground, (Player("p1", 2, f, costs),))
        with pytest.raises(NonSubmodularError):
            game_fns.compute_pne(G)

    def test_empty_strategy_set(self, singleton_game):
        """Test a demand above f(E) is infeasible."""
        with pytest.raises(InfeasibleError):
            game_fns.compute_pne(singleton_game.with_demand(0, 3))

    @pytest.mark.parametrize("seed", range(12))
    def test_random_games(self, seed):
        """Test equilibria on random games survive the exhaustive check."""
        G = generators.random_game(random.Random(f"game:{seed}"), max_players=3, max_resources=4)
        x, log = game_fns.compute_pne(G)
        assert game_fns.is_pne(G, x, exhaustive=True)
        assert log.while_steps <= log.total_bound
        assert oracle.brute_pne(G) is not None


# =============================================================================
# CONSTRUCTOR TESTS
# =============================================================================


class TestConstructors:
    """Tests for the classical game families."""

    def test_singleton_integer_splittable(self, resources):
        """Test f_i covers the allowed resources with value d_i."""
        G = game_fns.from_singleton_integer_splittable(
            resources, [["r1"], ["r1", "r2"]], [1, 2], [Congestion.linear(1)] * 3
        )
        assert [p.f.total for p in G.players] == [1, 2]
        assert G.players[0].f(["r2"]) == 0

    def test_matroid_congestion(self, resources):
        """Test players choose a basis and pay c(1 + t)."""
        rk = rank_fns.matroid_from_rank_table(
            GroundSet(("r1", "r2")),
            ["r1", "r2"],
            {(): 0, ("r1",): 1, ("r2",): 1, ("r1", "r2"): 1},
        )
        congestion = {
            "r1": Congestion.linear(1),
            "r2": Congestion.linear(1),
            "r3": Congestion.constant(0),
        }
        G = game_fns.from_matroid_congestion(resources, [rk, rk], [congestion, congestion])
        assert G.demands == (1, 1)
        x, _ = game_fns.compute_pne(G)
        assert x.loads() == (1, 1, 0)

    def test_matroid_integer_splittable(self):
        """Test f_i = k_i * rk_i and d_i = f_i(E)."""
        tri = rank_fns.graphic_matroid_rank([("a", "b", "ab"), ("b", "c", "bc"), ("a", "c", "ac")])
        G = game_fns.from_matroid_integer_splittable(
            tri.ground, [tri], [2], {label: Congestion.linear(1) for label in tri.ground.labels}
        )
        assert G.demands == (4,)

    def test_game_validation(self, resources):
        """Test players must live on the shared resources."""
        other = rank_fns.uniform(GroundSet(("x",)), 1)
        linear = scaled_congestion(Congestion.linear(1))
        with pytest.raises(ConstructionError):
            Game(resources, (Player("p1", 1, other, (linear,) * 3),))
        with pytest.raises(ConstructionError):
            Game(resources, ())

    def test_validation_errors(self, singleton_game):
        """Test oversized demands are reported."""
        errors = singleton_game.with_demand(1, 5).validation_errors()
        assert any("p2" in e for e in errors)
