"""YAML/JSON instance loader with a cache for the bundled fixtures."""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pydantic import TypeAdapter

from app.config import settings
from app.exceptions import InputError
from app.schemas.instances import GameFile, InstanceFile, ProblemFile

logger = logging.getLogger(__name__)

# Cache for parsed fixtures
_fixture_cache: Dict[str, Any] = {}

_instance_adapter: TypeAdapter = TypeAdapter(InstanceFile)


@dataclass(frozen=True)
class LoadedInstance:
    """A validated instance file with the digest of its bytes."""

    document: Union[ProblemFile, GameFile]
    digest: str
    path: Path


def get_fixtures_path() -> Path:
    """Get the path to the bundled fixtures directory."""
    return Path(__file__).parent / "fixtures"


def parse_instance(data: Any) -> Union[ProblemFile, GameFile]:
    """Validate a parsed document; raises pydantic ValidationError or InputError."""
    if not isinstance(data, dict):
        raise InputError("Instance file must contain a mapping at the top level")
    version = data.get("schema")
    if version != settings.INSTANCE_SCHEMA_VERSION:
        raise InputError(
            f"Unsupported instance schema {version!r}; expected {settings.INSTANCE_SCHEMA_VERSION}"
        )
    return _instance_adapter.validate_python(data)


def load_instance(path: Union[str, Path]) -> LoadedInstance:
    """
    Load and validate an instance file.

    JSON files go through the same YAML parser.

    Args:
        path: Path to a .yaml, .yml or .json file

    Returns:
        LoadedInstance with the validated document and the sha256 of the file bytes
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        logger.error(f"Instance file not found: {path}")
        raise InputError(f"Instance file not found: {path}") from None
    try:
        data = yaml.safe_load(raw.decode("utf-8"))
    except yaml.YAMLError as e:
        logger.error(f"Error parsing instance file {path}: {e}")
        raise
    document = parse_instance(data)
    logger.info(f"Loaded {document.kind} instance from {path}")
    return LoadedInstance(document, hashlib.sha256(raw).hexdigest(), path)


def load_fixture(name: str, force_reload: bool = False) -> Union[ProblemFile, GameFile]:
    """
    Load a bundled fixture by name (without extension).

    Args:
        name: Fixture name, e.g. "k3_mm1"
        force_reload: Force reload from disk even if cached

    Returns:
        The validated instance document
    """
    if name in _fixture_cache and not force_reload:
        return _fixture_cache[name]
    path = get_fixtures_path() / f"{name}.yaml"
    _fixture_cache[name] = load_instance(path).document
    return _fixture_cache[name]


def list_fixtures() -> list[str]:
    return sorted(p.stem for p in get_fixtures_path().glob("*.yaml"))


def dump_document(document: dict, path: Union[str, Path]) -> Path:
    """Validate and write an instance document; .json suffix writes JSON, else YAML."""
    parse_instance(document)
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    else:
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
    logger.info(f"Wrote instance file {path}")
    return path
