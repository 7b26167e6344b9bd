"""Tests for the constructions on non-submodular rank functions."""

import random

import pytest

from app.exceptions import DomainError, InputError, NonSubmodularError
from app.services import counterexample, game, oracle
from app.services import rank as rank_fns
from app.services.generators import canonical_nonsubmodular, random_nonsubmodular_rank
from app.services.rank import GroundSet


@pytest.fixture
def canonical():
    return canonical_nonsubmodular()


# =============================================================================
# TIGHTENING TESTS
# =============================================================================


class TestTightening:
    """Tests for tightening, the violating pair and the critical elements."""

    def test_tighten_keeps_points(self, canonical):
        """Test B_f(2) is unchanged by tightening."""
        tightened = counterexample.tighten(canonical)
        assert oracle.enumerate_points(tightened, 2) == oracle.enumerate_points(canonical, 2)
        assert tightened.table == canonical.table

    def test_violation(self, canonical):
        """Test the smallest 1,1,1,2 pair."""
        tightened = counterexample.tighten(canonical)
        violation = counterexample.find_violation(tightened, canonical)
        assert violation.to_dict(canonical.ground) == {
            "S": ["2", "3"],
            "T": ["2", "4"],
            "violates_original": True,
        }

    def test_critical_quadruple(self, canonical):
        """Test e1..e4 and the witnesses x and y."""
        tightened = counterexample.tighten(canonical)
        violation = counterexample.find_violation(tightened, canonical)
        quad = counterexample.find_critical_quadruple(tightened, violation.S, violation.T)
        assert quad.elements == (0, 1, 2, 3)
        assert quad.x == (1, 1, 0, 0)
        assert quad.y == (0, 0, 1, 1)
        assert sorted(quad.others) == [(1, 0, 0, 1), (1, 0, 1, 0), (2, 0, 0, 0)]

    def test_refuses_unit_demand(self, canonical):
        """Test demand 1 is refused and d != 2 is out of domain."""
        with pytest.raises(InputError):
            counterexample.tighten(canonical, 1)
        with pytest.raises(DomainError):
            counterexample.tighten(canonical, 3)

    def test_refuses_submodular(self):
        """Test a submodular function has no counterexample."""
        f = rank_fns.uniform(GroundSet(("a", "b", "c", "d")), 2)
        with pytest.raises(NonSubmodularError):
            counterexample.tighten(f)

    def test_refuses_loops(self):
        """Test strict positivity is required."""
        f = rank_fns.singleton_cover(GroundSet(("a", "b")), ["a"], 2)
        with pytest.raises(InputError):
            counterexample.tighten(f)

    def test_unit_demand_is_polymatroidal(self, canonical):
        """Test B_f(1) is the base polytope of a submodular function."""
        g = counterexample.unit_demand_is_polymatroidal(canonical)
        assert rank_fns.is_submodular(g)
        assert oracle.enumerate_points(g, 1) == oracle.enumerate_points(canonical, 1)


# =============================================================================
# SENSITIVITY TESTS
# =============================================================================


class TestSensitivity:
    """Tests for the sensitivity counterexample."""

    def test_canonical(self, canonical):
        """Test the optimum jumps by 4 and the demand path by 3."""
        result = counterexample.build_sensitivity_counterexample(canonical)
        assert result.parameter_distance == 4
        assert result.demand_distance == 3
        assert result.t_shifted == (0, 1, 0, 0)
        payload = result.to_dict()
        assert payload["optimum"] == [1, 1, 0, 0]
        assert payload["optimum_shifted"] == [0, 0, 1, 1]
        assert payload["optimum_shifted_demand_1"] == [0, 1, 0, 0]
        assert payload["values"] == {
            "optimum": "11",
            "optimum_shifted": "13",
            "optimum_shifted_demand_1": "6",
        }


# =============================================================================
# GAME WITHOUT EQUILIBRIUM TESTS
# =============================================================================


class TestNoPneGame:
    """Tests for the two-player game without a pure Nash equilibrium."""

    def test_canonical(self, canonical):
        """Test the game on the four critical resources."""
        built = counterexample.build_no_pne_game(canonical)
        assert built.game.resources.labels == ("g", "h", "a", "b")
        assert built.search.profile is None
        assert built.search.strategy_counts == (5, 5)
        assert built.search.profiles_examined == 25
        assert built.cells["y1"]["y2"] == "1+1,1+0"
        assert built.cells["x1"]["y2"] == "0+0,1+2"

    def test_bimatrix_costs(self, canonical):
        """Test (pi_1, pi_2) at (y1, y2)."""
        built = counterexample.build_no_pne_game(canonical)
        resources = built.game.resources
        y1 = tuple(1 if r in ("a", "b") else 0 for r in resources.labels)
        y2 = tuple(1 if r in ("a", "h") else 0 for r in resources.labels)
        assert counterexample.bimatrix_costs(built.game, y1, y2) == (2, 1)

    def test_algorithm_refuses_game(self, canonical):
        """Test the equilibrium algorithm will not run on the constructed game."""
        built = counterexample.build_no_pne_game(canonical)
        with pytest.raises(NonSubmodularError):
            game.compute_pne(built.game)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_functions(self, seed):
        """Test both constructions on random non-submodular functions."""
        f = random_nonsubmodular_rank(random.Random(f"counter:{seed}"), 5)
        sensitivity = counterexample.build_sensitivity_counterexample(f)
        assert (sensitivity.parameter_distance, sensitivity.demand_distance) == (4, 3)
        built = counterexample.build_no_pne_game(f)
        assert built.search.profile is None
        assert len(built.game.resources.labels) == 4 + 2 * (5 - 4)
