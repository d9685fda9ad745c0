import hashlib
import json
import math
from typing import Any, List

SIGNIFICANT_DIGITS = 12


def format_float(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Render a float with a fixed number of significant digits.

    Python's ``format`` ignores the process locale, so the decimal separator is
    always a dot.

    Args:
        value (float): Value to format.
        digits (int, optional): Significant digits. Defaults to 12.

    Returns:
        str: Formatted number.
    """
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(float(value), f".{digits}g")


def canonical_float(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """Round a float to ``digits`` significant digits for canonical output."""
    if not math.isfinite(value):
        return value
    return float(format(float(value), f".{digits}g"))


def canonicalize(obj: Any) -> Any:
    """Recursively round every float in a JSON-like structure."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return canonical_float(obj)
    if isinstance(obj, dict):
        return {str(k): canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    return obj


def document_digest(document: Any) -> str:
    """Stable SHA-256 of a JSON document, independent of key order."""
    payload = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def stream_key(name: str) -> int:
    """Map a stream name to a stable 32-bit integer."""
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "big")


def split_path(path: str) -> List[str]:
    """Split a dotted parameter path, rejecting empty segments."""
    if not path or not path.strip():
        raise ValueError("Parameter path cannot be empty")
    parts = path.strip().split(".")
    if any(not part for part in parts):
        raise ValueError(f"Invalid parameter path: {path}")
    return parts


def _step(node: Any, part: str, path: str) -> Any:
    if isinstance(node, dict):
        if part not in node:
            raise KeyError(path)
        return node[part]
    if isinstance(node, list):
        if not part.isdigit() or int(part) >= len(node):
            raise KeyError(path)
        return node[int(part)]
    raise KeyError(path)


def resolve_path(document: Any, path: str) -> Any:
    """Return the value addressed by a dotted path (list items by index).

    Raises:
        KeyError: If any segment does not resolve.
    """
    node = document
    for part in split_path(path):
        node = _step(node, part, path)
    return node


def set_path(document: Any, path: str, value: Any) -> None:
    """Replace the value addressed by an existing dotted path in place.

    Raises:
        KeyError: If any segment does not resolve.
    """
    parts = split_path(path)
    parent = document
    for part in parts[:-1]:
        parent = _step(parent, part, path)
    _step(parent, parts[-1], path)
    if isinstance(parent, list):
        parent[int(parts[-1])] = value
    else:
        parent[parts[-1]] = value


def parse_value(text: str) -> Any:
    """Parse a command-line value as JSON, falling back to the raw string."""
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        return text


def parse_list(text: str) -> List[str]:
    """Split a comma-separated option value, dropping blanks."""
    return [item.strip() for item in text.split(",") if item.strip()]
