"""
Reading and writing manifold files.

Manifold files are JSON documents with ``levels``, ``crossings`` and an optional
``lifetime_ms``; the shipped fixtures use the ``.cfg`` extension.
"""

import json
import logging
from pathlib import Path

from core.exceptions import ManifoldParseError, ManifoldValidationError
from manifold.levels import LevelManifold
from manifold.serializers import LevelManifoldSerializer

logger = logging.getLogger(__name__)

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


def fixture_path(name: str) -> Path:
    """Return the path of a shipped fixture manifold."""
    return FIXTURE_DIR / name


def flatten_errors(errors, prefix: str = "") -> list[str]:
    """Turn nested serializer errors into ``path: message`` strings."""
    if isinstance(errors, dict):
        messages = []
        for key, value in errors.items():
            path = key if not prefix else (prefix if key == "non_field_errors" else f"{prefix}.{key}")
            messages.extend(flatten_errors(value, path))
        return messages
    if isinstance(errors, list):
        messages = []
        for index, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                messages.extend(flatten_errors(value, f"{prefix}[{index}]"))
            else:
                messages.append(f"{prefix}: {value}" if prefix else str(value))
        return messages
    return [f"{prefix}: {errors}" if prefix else str(errors)]


def manifold_from_document(document, *, lax: bool = False, source: str = "<document>") -> LevelManifold:
    """Validate a decoded document and build the manifold."""
    if not isinstance(document, dict):
        raise ManifoldParseError(f"{source}: top level must be an object")

    serializer = LevelManifoldSerializer(data=document, context={"lax": lax, "where": source})
    if not serializer.is_valid():
        raise ManifoldValidationError(f"{source}: " + "; ".join(flatten_errors(serializer.errors)))
    return serializer.save()


def load_manifold(path, *, lax: bool = False) -> LevelManifold:
    """Load and validate a manifold file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifoldParseError(f"cannot read {path}: {exc.strerror or exc}") from exc

    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifoldParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc

    manifold = manifold_from_document(document, lax=lax, source=str(path))
    logger.info(
        "Loaded manifold %s: %d levels, %d crossings", path.name, len(manifold.levels), len(manifold.crossings)
    )
    return manifold


def manifold_to_document(manifold: LevelManifold) -> dict:
    return LevelManifoldSerializer(manifold).data


def save_manifold(manifold: LevelManifold, path) -> Path:
    """Write a manifold file that ``load_manifold`` reads back unchanged."""
    path = Path(path)
    path.write_text(json.dumps(manifold_to_document(manifold), indent=2) + "\n", encoding="utf-8")
    return path
