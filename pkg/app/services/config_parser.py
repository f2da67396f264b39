"""
Flat run-configuration parser.

A configuration is a UTF-8 text of ``key = value`` lines with ``#``
comments. Values are read as JSON when possible (numbers, lists, quoted
strings), comma-separated lists of JSON scalars become lists, and anything
else is kept as a bare string. Every problem is collected and reported with
the line (or command-line option) it came from.
"""

import json
import logging
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from ..schemas.run_config import RunConfig
from ..utils.errors import ConfigError


logger = logging.getLogger(__name__)

Entry = Tuple[object, str]


def parse_value(raw: str):
    """JSON value, list of comma-separated JSON scalars, or the raw string."""
    raw = raw.strip()
    try:
        return json.loads(raw)
    except ValueError:
        pass
    if "," in raw and not raw.startswith("["):
        parts = [part.strip() for part in raw.split(",")]
        try:
            return [json.loads(part) for part in parts]
        except ValueError:
            return parts
    return raw


def _read_lines(text: str, errors: List[str]) -> Dict[str, Entry]:
    entries: Dict[str, Entry] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            errors.append(f"line {number}: expected 'key = value', got '{stripped}'")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if not key:
            errors.append(f"line {number}: empty key")
            continue
        if key in entries:
            errors.append(f"line {number}: duplicate key {key} (first set on {entries[key][1]})")
            continue
        entries[key] = (parse_value(raw), f"line {number}")
    return entries


def _nest(entries: Dict[str, Entry], errors: List[str]) -> dict:
    nested: dict = {}
    for key, (value, source) in entries.items():
        parts = key.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                errors.append(f"{source}: key {key} conflicts with scalar key {part}")
                break
            node = child
        else:
            if isinstance(node.get(parts[-1]), dict):
                errors.append(f"{source}: key {key} conflicts with section {key}.*")
            else:
                node[parts[-1]] = value
    return nested


def _line_number(source: str) -> int:
    return int(source.split()[-1]) if source.startswith("line ") else 1 << 30


def _source(loc: str, entries: Dict[str, Entry], message: str = "") -> str:
    """
    Where a validation error points: its own key, else the first key of its
    section; whole-config errors point at the first key their message names.
    """
    if loc in entries:
        return entries[loc][1]
    if not loc:
        named = [source for key, (_, source) in entries.items() if key in message]
        return min(named, key=_line_number) if named else "config"
    related = [source for key, (_, source) in entries.items() if key.startswith(loc + ".") or loc.startswith(key + ".")]
    if related:
        return min(related, key=_line_number)
    return "config"


def _describe(error: dict, entries: Dict[str, Entry]) -> str:
    loc = ".".join(str(part) for part in error["loc"])
    message = error["msg"]
    if message.startswith("Value error, "):
        message = message[len("Value error, "):]
    if error["type"] == "missing":
        return f"{_source(loc, entries)}: missing required key {loc}"
    if error["type"] == "extra_forbidden":
        return f"{_source(loc, entries)}: unknown key {loc}"
    label = f"{loc}: " if loc and loc not in message else ""
    return f"{_source(loc, entries, message)}: {label}{message}"


def parse_config(text: str, overrides: Optional[Dict[str, Entry]] = None) -> RunConfig:
    """
    Parse and validate a flat configuration.

    Args:
        text: Configuration document
        overrides: Extra ``key -> (value, source)`` entries that replace file
            keys (the CLI passes its options here)

    Returns:
        RunConfig: Validated configuration with defaults filled

    Raises:
        ConfigError: With every problem found, each prefixed by its source
    """
    errors: List[str] = []
    entries = _read_lines(text, errors)
    for key, (value, source) in (overrides or {}).items():
        entries[key] = (parse_value(value) if isinstance(value, str) else value, source)
    nested = _nest(entries, errors)
    config = None
    try:
        config = RunConfig.model_validate(nested)
    except ValidationError as exc:
        errors.extend(_describe(error, entries) for error in exc.errors())
    if errors:
        logger.warning("configuration rejected with %d errors", len(errors))
        raise ConfigError(errors)
    return config


def _flatten(prefix: str, value, out: Dict[str, str]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], out)
    elif value is not None:
        out[prefix] = json.dumps(value)


def config_echo(config: RunConfig) -> Dict[str, str]:
    """Flat ``key -> JSON value`` pairs that reproduce the configuration."""
    out: Dict[str, str] = {}
    _flatten("", config.model_dump(exclude={"output"}), out)
    return out
