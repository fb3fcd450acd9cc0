"""
Configuration validation utilities for OUFreq.
Checks experiment configs against the published schema and applies --set overrides.
"""

import copy  # For copying configs before applying overrides
import json  # For parsing override values
import logging  # For application logging
from typing import Any, Dict, List, Sequence, Tuple

from .errors import ConfigurationError

# Set up logger for this module
logger = logging.getLogger(__name__)

# JSON schema type names mapped onto Python type checks
_TYPE_CHECKS = {
    "object": lambda v: isinstance(v, dict),
    "array": lambda v: isinstance(v, (list, tuple)),
    "string": lambda v: isinstance(v, str),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "null": lambda v: v is None,
}


def _type_ok(value: Any, expected: Any) -> bool:
    """Check a value against a schema "type" entry (single name or list of names)."""
    names = expected if isinstance(expected, list) else [expected]
    return any(_TYPE_CHECKS.get(name, lambda v: True)(value) for name in names)


def schema_errors(data: Any, schema: Dict[str, Any], path: str = "") -> List[str]:
    """
    Collect violations of the subset of JSON schema used by the config schema.

    Supported keywords: type, properties, additionalProperties (false),
    required, items, enum, minItems, maxItems.

    Args:
        data: Parsed configuration (or a nested part of it)
        schema: Schema (or sub-schema) to check against
        path: Dotted path of `data` inside the full document

    Returns:
        List[str]: Human-readable error messages naming the dotted key
    """
    errors: List[str] = []
    label = path or "<root>"

    if "type" in schema and not _type_ok(data, schema["type"]):
        errors.append(f"{label}: expected {schema['type']}, got {type(data).__name__}")
        return errors  # Nested checks are meaningless on the wrong type

    if "enum" in schema and data not in schema["enum"]:
        errors.append(f"{label}: {data!r} is not one of {schema['enum']}")

    if isinstance(data, dict):
        properties = schema.get("properties", {})
        for key in schema.get("required", []):
            if key not in data:
                errors.append(f"{path + '.' if path else ''}{key}: required key missing")
        for key, value in data.items():
            dotted = f"{path}.{key}" if path else key
            if key in properties:
                errors.extend(schema_errors(value, properties[key], dotted))
            elif schema.get("additionalProperties", True) is False:
                errors.append(f"{dotted}: unknown key")

    if isinstance(data, (list, tuple)):
        if "minItems" in schema and len(data) < schema["minItems"]:
            errors.append(f"{label}: expected at least {schema['minItems']} items")
        if "maxItems" in schema and len(data) > schema["maxItems"]:
            errors.append(f"{label}: expected at most {schema['maxItems']} items")
        if "items" in schema:
            for index, item in enumerate(data):
                errors.extend(schema_errors(item, schema["items"], f"{label}[{index}]"))

    return errors


def check_config(data: Dict[str, Any], schema: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Check a configuration dictionary against the schema.

    Args:
        data: Parsed configuration
        schema: Published configuration schema

    Returns:
        Tuple[bool, str]: (is_valid, message). The message names the first
        offending key when invalid.

    Example:
        >>> ok, message = check_config({'model': {'thetaa': 1}}, schema)
        >>> ok, message
        (False, 'model.thetaa: unknown key')
    """
    if not data:
        return False, "configuration is empty or could not be read"
    errors = schema_errors(data, schema)
    if errors:
        for error in errors:
            logger.warning(f"Config validation: {error}")
        return False, errors[0]
    return True, "ok"


def _schema_has_key(schema: Dict[str, Any], dotted: str) -> bool:
    """True if the dotted key names a property declared by the schema."""
    node = schema
    for part in dotted.split("."):
        properties = node.get("properties", {})
        if part not in properties:
            return False
        node = properties[part]
    return True


def parse_override_value(text: str) -> Any:
    """Parse the right-hand side of key=value as JSON, falling back to a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str],
                    schema: Dict[str, Any]) -> Dict[str, Any]:
    """
    Apply `section.key=value` overrides to a copy of the configuration.

    Args:
        data: Parsed configuration
        overrides: Strings of the form "model.epsilon=0.01"
        schema: Published configuration schema

    Returns:
        Dict[str, Any]: New configuration with overrides applied

    Raises:
        ConfigurationError: Malformed pair or key not declared by the schema
    """
    result = copy.deepcopy(data)
    for pair in overrides:
        if "=" not in pair:
            raise ConfigurationError(f"override '{pair}' is not of the form key=value")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if not key or not _schema_has_key(schema, key):
            raise ConfigurationError(f"{key}: unknown key")
        node = result
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = parse_override_value(raw.strip())
        logger.info(f"Override applied: {key}={node[parts[-1]]!r}")
    return result
