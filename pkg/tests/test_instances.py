"""Tests for instance file schemas, loading and building."""

from fractions import Fraction

import pytest
import yaml
from pydantic import ValidationError

from app.exceptions import ConstructionError, InputError
from app.instances import (
    build_game,
    build_problem,
    dump_document,
    dump_game,
    dump_problem,
    list_fixtures,
    load_fixture,
    load_instance,
)
from app.instances.loader import get_fixtures_path, parse_instance
from app.schemas.instances import GameFile, ProblemFile
from app.services import optimize
from app.services.rank import RankKind


def problem_document(**overrides):
    document = {
        "schema": 1,
        "kind": "problem",
        "ground": ["a", "b"],
        "rank": {"kind": "singleton_cover", "support": ["a", "b"], "value": 2},
        "demand": 2,
        "default_cost": {"family": "polynomial", "coefficients": [0, 0, 1], "in_load": False},
    }
    document.update(overrides)
    return document


# =============================================================================
# SCHEMA TESTS
# =============================================================================


class TestSchemas:
    """Tests for instance file validation."""

    def test_minimal_problem(self):
        """Test defaults for t and costs."""
        doc = parse_instance(problem_document())
        assert isinstance(doc, ProblemFile)
        assert doc.t_vector() == (0, 0)

    def test_t_as_mapping(self):
        """Test partial t mappings default to zero."""
        doc = parse_instance(problem_document(t={"b": 3}))
        assert doc.t_vector() == (0, 3)

    def test_integer_labels(self):
        """Test unquoted YAML integers are read as labels."""
        rank = {"kind": "singleton_cover", "support": [1, 2], "value": 2}
        doc = parse_instance(problem_document(ground=[1, 2], rank=rank))
        assert doc.ground == ["1", "2"]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"demand": 1.5},
            {"demand": -1},
            {"extra": True},
            {"t": [0]},
            {"t": {"z": 1}},
            {"ground": ["a", "a"]},
            {"default_cost": None},
            {"costs": {"z": {"family": "mm1", "u": 3}}},
            {"default_cost": {"family": "polynomial", "coefficients": [0.5]}},
            {"default_cost": {"family": "polynomial", "coefficients": ["0.5"]}},
            {"rank": {"kind": "matroid", "support": ["a"]}},
        ],
    )
    def test_rejects_invalid_problems(self, overrides):
        """Test malformed documents raise ValidationError."""
        with pytest.raises(ValidationError):
            parse_instance(problem_document(**overrides))

    def test_rejects_wrong_schema_version(self):
        """Test the schema version is checked before validation."""
        with pytest.raises(InputError):
            parse_instance(problem_document(schema=2))
        with pytest.raises(InputError):
            parse_instance(["not", "a", "mapping"])

    def test_duplicate_players(self):
        """Test player names must be unique."""
        player = {
            "name": "p",
            "demand": 1,
            "rank": {"kind": "singleton_cover", "support": ["r"], "value": 1},
            "default_cost": {"family": "mm1", "u": 3},
        }
        with pytest.raises(ValidationError):
            parse_instance(
                {"schema": 1, "kind": "game", "resources": ["r"], "players": [player, player]}
            )


# =============================================================================
# LOADER TESTS
# =============================================================================


class TestLoader:
    """Tests for reading instance files."""

    def test_fixtures_load(self):
        """Test every bundled fixture validates."""
        names = list_fixtures()
        assert "k3_mm1" in names
        for name in names:
            assert load_fixture(name, force_reload=True).schema_ == 1

    def test_fixture_cache(self):
        """Test fixtures are cached until force_reload."""
        first = load_fixture("k3_mm1")
        assert load_fixture("k3_mm1") is first
        assert load_fixture("k3_mm1", force_reload=True) is not first

    def test_digest(self):
        """Test the digest is the sha256 of the file bytes."""
        import hashlib

        path = get_fixtures_path() / "k3_mm1.yaml"
        loaded = load_instance(path)
        assert loaded.digest == hashlib.sha256(path.read_bytes()).hexdigest()

    def test_missing_file(self, tmp_path):
        """Test a missing file is an input error."""
        with pytest.raises(InputError):
            load_instance(tmp_path / "nope.yaml")

    def test_malformed_yaml(self, tmp_path):
        """Test YAML syntax errors propagate."""
        path = tmp_path / "bad.yaml"
        path.write_text("schema: [1\n", encoding="utf-8")
        with pytest.raises(yaml.YAMLError):
            load_instance(path)

    def test_json_files(self, tmp_path):
        """Test .json files are written as JSON and read back."""
        path = dump_document(problem_document(), tmp_path / "pair.json")
        assert path.read_text(encoding="utf-8").startswith("{")
        assert isinstance(load_instance(path).document, ProblemFile)


# =============================================================================
# BUILDER TESTS
# =============================================================================


class TestBuilder:
    """Tests for turning documents into domain objects."""

    def test_k3(self):
        """Test the triangle fixture solves to 4/3."""
        P = build_problem(load_fixture("k3_mm1"))
        assert P.f.kind == RankKind.GRAPHIC_MATROID
        x = optimize.solve(P)
        assert x == (1, 1, 0)
        assert P.objective(x) == Fraction(4, 3)

    def test_tree_packing(self):
        """Test scaled graphic rank and t given as a mapping."""
        P = build_problem(load_fixture("tree_packing"))
        assert P.f.total == 6
        assert P.t == (0, 1, 0, 2, 1)
        assert P.f.flags.submodular

    def test_graphic_ground_order(self):
        """Test graph edges must match the ground set order."""
        doc = parse_instance(
            problem_document(
                ground=["y", "x"],
                rank={"kind": "graphic", "edges": [["a", "b", "x"], ["b", "c", "y"]]},
            )
        )
        with pytest.raises(ConstructionError):
            build_problem(doc)

    def test_game(self):
        """Test per-resource costs and default costs."""
        G = build_game(load_fixture("singleton_game"))
        assert [p.name for p in G.players] == ["p1", "p2"]
        assert G.players[0].costs[1](1, 0) == 2
        assert G.players[1].costs[1](1, 0) == 1

    @pytest.mark.parametrize(
        "name", ["k3_mm1", "uniform_pair", "canonical_nonsubmodular", "tree_packing"]
    )
    def test_problem_round_trip(self, name, tmp_path):
        """Test dump -> load -> dump reproduces the document."""
        document = dump_problem(build_problem(load_fixture(name)))
        path = dump_document(document, tmp_path / f"{name}.yaml")
        assert dump_problem(build_problem(load_instance(path).document)) == document

    @pytest.mark.parametrize("name", ["singleton_game", "zero_demand_game"])
    def test_game_round_trip(self, name, tmp_path):
        """Test games survive a round trip."""
        document = dump_game(build_game(load_fixture(name)))
        path = dump_document(document, tmp_path / f"{name}.yaml")
        reloaded = load_instance(path).document
        assert isinstance(reloaded, GameFile)
        assert dump_game(build_game(reloaded)) == document
