"""Tests for greedy optimization, the optimality test and reoptimization."""

import random
from fractions import Fraction

import networkx as nx
import pytest

from app.exceptions import DomainError, InfeasibleError, InputError, PreconditionError
from app.services import generators, optimize, oracle
from app.services import rank as rank_fns
from app.services.cost import custom_table, mm1, polynomial
from app.services.exact import INF
from app.services.optimize import ProblemInstance, StepKind
from app.services.polytope import BasePolytope, l1_distance
from app.services.rank import GroundSet


# =============================================================================
# FIXTURES
# =============================================================================


@pytest.fixture
def k3():
    """Spanning trees of a triangle with M/M/1 delays, capacity 3."""
    f = rank_fns.graphic_matroid_rank([("a", "b", "ab"), ("b", "c", "bc"), ("a", "c", "ac")])
    return ProblemInstance(BasePolytope(f, 2), (0, 0, 0), (mm1(3),) * 3)


@pytest.fixture
def uniform_pair():
    """Two units over two elements with C(x) = x^2."""
    f = rank_fns.singleton_cover(GroundSet(("a", "b")), ["a", "b"], 2)
    return ProblemInstance(BasePolytope(f, 2), (0, 0), (polynomial([0, 0, 1], in_load=False),) * 2)


# =============================================================================
# SOLVE TESTS
# =============================================================================


class TestSolve:
    """Tests for the greedy solver."""

    def test_triangle(self, k3):
        """Test the greedy tree and its objective."""
        x = optimize.solve(k3)
        assert x == (1, 1, 0)
        assert k3.objective(x) == Fraction(4, 3)
        assert k3.loaded_cost(x) == 1
        assert optimize.objective_summary(k3, x) == {
            "objective": "4/3",
            "loaded_cost": "1",
            "infinite_objective": False,
            "cost_scope": optimize.COST_SCOPE,
        }

    def test_uniform_pair(self, uniform_pair):
        """Test units are spread when costs are convex."""
        x = optimize.solve(uniform_pair)
        assert x == (1, 1)
        assert uniform_pair.objective(x) == 2

    def test_zero_demand(self, k3):
        """Test d = 0 gives the zero allocation."""
        assert optimize.solve(k3.with_d(0)) == (0, 0, 0)

    def test_infeasible_demand(self, k3):
        """Test d > f(E) raises InfeasibleError."""
        with pytest.raises(InfeasibleError):
            optimize.solve(k3.with_d(3))

    def test_demand_path(self, k3):
        """Test optima for every demand differ by one unit."""
        path = optimize.solve_demand_path(k3)
        assert path == [(0, 0, 0), (1, 0, 0), (1, 1, 0)]

    def test_instance_validation(self, k3):
        """Test parameter and cost vectors must match the ground set."""
        with pytest.raises(DomainError):
            k3.with_t((0, 0))
        with pytest.raises(DomainError):
            k3.with_t((0, -1, 0))
        with pytest.raises(DomainError):
            ProblemInstance(k3.polytope, (0, 0, 0), (mm1(3),))

    def test_irregular_cost_refused(self):
        """Test ensure_regular names the first irregular element."""
        f = rank_fns.uniform(GroundSet(("a",)), 1)
        C = custom_table({(0, 0): 0, (1, 0): 5, (0, 1): 0, (1, 1): 1, (2, 0): 10})
        P = ProblemInstance(BasePolytope(f, 1), (0,), (C,))
        assert P.regularity_violations()[0][0] == 0
        with pytest.raises(InputError):
            P.ensure_regular()

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_brute_force(self, seed):
        """Test the greedy optimum value equals the enumerated minimum."""
        P = generators.random_instance(random.Random(f"solve:{seed}"), max_ground=4, max_demand=4)
        x = optimize.solve(P)
        _, best = oracle.brute_optimum(P)
        assert P.polytope.member(x)
        assert P.objective(x) == best
        assert optimize.verify_optimal(P, x)


# =============================================================================
# OPTIMALITY TEST TESTS
# =============================================================================


class TestVerifyOptimal:
    """Tests for the local optimality test."""

    def test_detects_improving_exchange(self, uniform_pair):
        """Test (2, 0) is caught with its cheaper exchange."""
        check = optimize.verify_optimal(uniform_pair, (2, 0))
        assert not check.optimal
        assert check.violating_element == 0
        assert check.left_marginal == 3
        assert check.delta.value == 1
        assert check.delta.argmin == 1

    def test_delta_on_empty_exchange_set(self, k3):
        """Test Delta is +inf when nothing can take the unit."""
        dv = optimize.delta(k3, (1, 1, 0), 2)
        assert dv.argmin is None
        assert dv.value > Fraction(10**9)

    def test_requires_membership(self, k3):
        """Test points outside the polytope are refused."""
        with pytest.raises(PreconditionError):
            optimize.verify_optimal(k3, (2, 0, 0))


# =============================================================================
# REOPTIMIZATION TESTS
# =============================================================================


class TestReoptimize:
    """Tests for unit parameter and demand shifts."""

    def test_parameter_increase_moves_one_unit(self, k3):
        """Test a loaded edge that gets slower hands its unit over."""
        step = optimize.reoptimize_t_increase(k3, (1, 1, 0), 0)
        assert step.allocation == (0, 1, 1)
        assert step.step.kind == StepKind.EXCHANGE
        assert (step.step.source, step.step.target) == (0, 2)
        assert step.step.stage == "t+0"
        assert not step.fallback

    def test_parameter_decrease_keeps_ties(self, k3):
        """Test an equally good allocation is kept."""
        shifted = k3.with_t((1, 0, 0))
        step = optimize.reoptimize_t_decrease(shifted, (0, 1, 1), 0)
        assert step.allocation == (0, 1, 1)
        assert step.step is None

    def test_parameter_decrease_at_zero(self, k3):
        """Test t cannot go below zero."""
        with pytest.raises(DomainError):
            optimize.reoptimize_t_decrease(k3, (1, 1, 0), 0)

    def test_requires_optimal_start(self, uniform_pair):
        """Test a non-optimal start is refused."""
        with pytest.raises(PreconditionError):
            optimize.reoptimize_t_increase(uniform_pair, (2, 0), 1)

    def test_demand_steps(self, k3):
        """Test d - 1 drops one unit and d + 1 past f(E) is infeasible."""
        step = optimize.reoptimize_d(k3, (1, 1, 0), -1)
        assert step.allocation == (0, 1, 0)
        assert step.step.kind == StepKind.DECREMENT
        with pytest.raises(InfeasibleError):
            optimize.reoptimize_d(k3, (1, 1, 0), 1)
        with pytest.raises(DomainError):
            optimize.reoptimize_d(k3, (1, 1, 0), 2)

    def test_general(self, k3):
        """Test a combined shift records one step per unit."""
        result = optimize.reoptimize_general(k3, (1, 1, 0), (1, 0, 0), 1)
        assert result.instance.d == 1
        assert result.instance.t == (1, 0, 0)
        assert len(result.trace) <= 2
        assert optimize.verify_optimal(result.instance, result.allocation)
        assert result.fallbacks == 0

    @pytest.mark.parametrize("seed", range(10))
    def test_general_matches_brute_force(self, seed):
        """Test reoptimized allocations are optimal and within 2|dt| + |dd|."""
        rng = random.Random(f"reopt:{seed}")
        P = generators.random_instance(rng, max_ground=4, max_demand=4)
        x = optimize.solve(P)
        t_target = tuple(max(0, v + rng.randint(-1, 1)) for v in P.t)
        d_target = rng.randint(0, min(4, P.f.total))
        result = optimize.reoptimize_general(P, x, t_target, d_target)
        _, best = oracle.brute_optimum(result.instance)
        assert result.instance.objective(result.allocation) == best
        dt = sum(abs(a - b) for a, b in zip(P.t, t_target))
        assert l1_distance(x, result.allocation) <= 2 * dt + abs(P.d - d_target)


# =============================================================================
# SPANNING-TREE PACKING TESTS
# =============================================================================


class TestTreePacking:
    """Tests for the spanning-tree packing instance."""

    TRIANGLE = [("a", "b", "ab"), ("b", "c", "bc"), ("a", "c", "ac")]

    @pytest.fixture
    def triangle_graph(self):
        graph = nx.MultiGraph()
        for u, v, label in self.TRIANGLE:
            graph.add_edge(u, v, label=label)
        return graph

    def test_instance(self, triangle_graph):
        """Test d = k(|V| - 1) and t = u - u_e, matched by edge label."""
        P = optimize.tree_packing_instance(triangle_graph, 2, {"ab": 3, "bc": 3, "ac": 2})
        assert P.d == 4
        assert dict(zip(P.f.ground.labels, P.t)) == {"ab": 0, "bc": 0, "ac": 1}
        x = optimize.solve(P)
        _, best = oracle.brute_optimum(P)
        assert P.objective(x) == best

    def test_positional_capacities_need_ordered_edges(self, triangle_graph):
        """Test a list of capacities is refused for a networkx graph."""
        with pytest.raises(DomainError):
            optimize.tree_packing_instance(triangle_graph, 1, [3, 3, 2])
        with pytest.raises(DomainError):
            optimize.tree_packing_instance(triangle_graph, 1, {"ab": 3, "bc": 3})

    def test_capacity_shift(self):
        """Test raising a capacity lowers t and cannot pass the shared bound."""
        P = optimize.tree_packing_instance(self.TRIANGLE, 1, [3, 3, 2])
        assert P.f.ground.labels == ("ab", "bc", "ac")
        assert P.t == (0, 0, 1)
        assert optimize.capacity_shift(P, 2, 1) == (0, 0, 0)
        assert optimize.capacity_shift(P, 0, -1) == (1, 0, 1)
        with pytest.raises(DomainError):
            optimize.capacity_shift(P, 0, 1)


# =============================================================================
# SATURATED CAPACITY TESTS
# =============================================================================


class TestSaturatedCapacity:
    """Tests on M/M/1 instances where some element sits at capacity (cost +inf)."""

    @pytest.fixture
    def one_saturated(self):
        """One unit over three links; link c already has t = u, so its cost is +inf."""
        f = rank_fns.uniform(GroundSet(("a", "b", "c")), 1)
        return ProblemInstance(BasePolytope(f, 1), (0, 0, 1), (mm1(3), mm1(3), mm1(1)))

    @pytest.fixture
    def all_saturated(self):
        """Every link at capacity: every allocation has objective +inf."""
        f = rank_fns.uniform(GroundSet(("a", "b")), 1)
        return ProblemInstance(BasePolytope(f, 1), (1, 1), (mm1(1), mm1(1)))

    def test_solve_and_verify(self, one_saturated):
        """Test the greedy optimum avoids the saturated link and passes the test."""
        x = optimize.solve(one_saturated)
        assert x == (1, 0, 0)
        assert one_saturated.objective(x) == INF
        assert optimize.verify_optimal(one_saturated, x)
        assert optimize.delta(one_saturated, x, 0) == optimize.DeltaValue(Fraction(1, 6), 1)
        assert optimize.objective_summary(one_saturated, x)["infinite_objective"] is True

    def test_parameter_increase_moves_past_infinite_objective(self, one_saturated):
        """Test the unit leaves a slowed link although both objectives are +inf."""
        x = optimize.solve(one_saturated)
        result = optimize.reoptimize_t_increase(one_saturated, x, 0)
        assert result.allocation == (0, 1, 0)
        assert result.step.kind == StepKind.EXCHANGE
        assert (result.step.source, result.step.target) == (0, 1)
        assert not result.fallback

    def test_parameter_decrease_moves_without_resolve(self):
        """Test a sped-up link attracts the unit by a local exchange."""
        f = rank_fns.uniform(GroundSet(("a", "b", "c")), 1)
        P = ProblemInstance(BasePolytope(f, 1), (0, 1, 1), (mm1(3), mm1(4), mm1(1)))
        x = optimize.solve(P)
        assert x == (1, 0, 0)
        result = optimize.reoptimize_t_decrease(P, x, 1)
        assert result.allocation == (0, 1, 0)
        assert result.step.kind == StepKind.EXCHANGE
        assert not result.fallback

    def test_demand_steps(self):
        """Test unit demand changes next to a saturated link."""
        f = rank_fns.uniform(GroundSet(("a", "b", "c")), 2)
        P = ProblemInstance(BasePolytope(f, 1), (0, 1, 1), (mm1(3), mm1(4), mm1(1)))
        x = optimize.solve(P)
        up = optimize.reoptimize_d(P, x, 1)
        assert up.allocation == (1, 1, 0)
        down = optimize.reoptimize_d(P.with_d(2), up.allocation, -1)
        assert down.allocation == (0, 1, 0)
        assert not down.fallback

    def test_all_infinite(self, all_saturated):
        """Test solve, shifts and brute force agree when every allocation costs +inf."""
        x = optimize.solve(all_saturated)
        assert x == (1, 0)
        assert all_saturated.objective(x) == INF
        assert optimize.verify_optimal(all_saturated, x)
        assert oracle.brute_optimum(all_saturated) == ((0, 1), INF)
        assert optimize.reoptimize_t_increase(all_saturated, x, 0).allocation == (1, 0)
        result = optimize.reoptimize_general(all_saturated, x, (0, 0), 1)
        assert result.fallbacks == 0
        assert optimize.verify_optimal(result.instance, result.allocation)
