"""Tests for base polytope membership, exchange and slack sets."""

import pytest

from app.exceptions import DomainError, PreconditionError
from app.services import oracle
from app.services import rank as rank_fns
from app.services.generators import canonical_nonsubmodular
from app.services.polytope import (
    BasePolytope,
    allocation,
    apply_exchange,
    l1_distance,
    unit_vector,
)


@pytest.fixture
def triangle():
    return rank_fns.graphic_matroid_rank([("a", "b", "ab"), ("b", "c", "bc"), ("a", "c", "ac")])


class TestMembership:
    """Tests for x in B_f(d)."""

    def test_spanning_trees(self, triangle):
        """Test the bases of the triangle are its spanning trees."""
        B = BasePolytope(triangle, 2)
        assert B.member((1, 1, 0))
        assert B.member((0, 1, 1))
        assert not B.member((2, 0, 0))
        assert not B.member((1, 0, 0))

    def test_indexing_errors(self, triangle):
        """Test malformed allocations raise DomainError."""
        B = BasePolytope(triangle, 2)
        with pytest.raises(DomainError):
            B.member((1, 1))
        with pytest.raises(DomainError):
            B.member((1, -1, 2))

    def test_negative_demand(self, triangle):
        """Test d must be a nonnegative integer."""
        with pytest.raises(DomainError):
            BasePolytope(triangle, -1)

    def test_nonempty_bound(self, triangle):
        """Test d <= f(E)."""
        assert BasePolytope(triangle, 2).is_nonempty_bound()
        assert not BasePolytope(triangle, 3).is_nonempty_bound()

    def test_agrees_with_enumeration(self):
        """Test membership matches the oracle on the canonical function."""
        f = canonical_nonsubmodular()
        B = BasePolytope(f, 2)
        points = oracle.enumerate_base(B)
        assert points == [(0, 0, 1, 1), (1, 0, 0, 1), (1, 0, 1, 0), (1, 1, 0, 0), (2, 0, 0, 0)]
        assert all(B.member(x) for x in points)
        assert not B.member((0, 1, 1, 0))


class TestExchangeAndSlack:
    """Tests for D_e(x) and S(x)."""

    def test_exchange_set(self, triangle):
        """Test only swaps that keep a spanning tree are allowed."""
        B = BasePolytope(triangle, 2)
        assert B.exchange_set((1, 1, 0), 0) == (2,)
        assert B.exchange_set((1, 1, 0), 2) == ()
        for g in B.exchange_set((1, 1, 0), 1):
            assert B.member(apply_exchange((1, 1, 0), 1, g))

    def test_exchange_set_needs_member(self, triangle):
        """Test D_e(x) is only defined on the polytope."""
        with pytest.raises(PreconditionError):
            BasePolytope(triangle, 2).exchange_set((2, 0, 0), 0)

    def test_slack_set(self, triangle):
        """Test S(x) lists elements that can take one more unit."""
        assert BasePolytope(triangle, 1).slack_set((1, 0, 0)) == (1, 2)
        assert BasePolytope(triangle, 2).slack_set((1, 1, 0)) == ()


class TestAllocations:
    """Tests for allocation helpers."""

    def test_helpers(self):
        """Test unit vectors, distances and validation."""
        assert unit_vector(3, 1) == (0, 1, 0)
        assert l1_distance((1, 1, 0, 0), (0, 0, 1, 1)) == 4
        assert allocation([2, 0]) == (2, 0)
        with pytest.raises(DomainError):
            allocation([1, -1])
