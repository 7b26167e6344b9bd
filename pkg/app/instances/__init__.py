"""Instance files: loading, validation, building and dumping."""

from app.instances.builder import (
    build_cost,
    build_game,
    build_instance,
    build_problem,
    build_rank,
    dump_game,
    dump_problem,
)
from app.instances.loader import (
    LoadedInstance,
    dump_document,
    get_fixtures_path,
    list_fixtures,
    load_fixture,
    load_instance,
    parse_instance,
)

__all__ = [
    "LoadedInstance",
    "build_cost",
    "build_game",
    "build_instance",
    "build_problem",
    "build_rank",
    "dump_document",
    "dump_game",
    "dump_problem",
    "get_fixtures_path",
    "list_fixtures",
    "load_fixture",
    "load_instance",
    "parse_instance",
]
