"""Config-file handling: CLI flag > config file section > built-in default.

Config files are TOML-style key=value sections, e.g.::

    [pipeline]
    max_length = 7
    containment = "union"

Quoted strings are unquoted; booleans accept true/false/1/0/yes/no.
"""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any, Optional

from .io import DataError


class ConfigStack:
    def __init__(self, path: Optional[str] = None):
        self._values: dict[tuple[str, str], str] = {}
        if path:
            if not Path(path).exists():
                raise DataError(f"config file not found: {path}")
            parser = configparser.ConfigParser()
            try:
                parser.read(path)
            except configparser.Error as exc:
                raise DataError(f"cannot parse config file {path}: {exc}") from None
            for section in parser.sections():
                for key, value in parser.items(section):
                    self._values[(section, key)] = value

    @staticmethod
    def _coerce(raw: str, kind: type) -> Any:
        raw = raw.strip()
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
            raw = raw[1:-1]
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise DataError(f"cannot read {raw!r} as a boolean")
        try:
            return kind(raw)
        except ValueError:
            raise DataError(f"cannot read {raw!r} as {kind.__name__}") from None

    def resolve(
        self,
        section: str,
        key: str,
        cli_value: Any,
        default: Any,
        kind: Optional[type] = None,
    ) -> Any:
        """Highest-precedence defined value among CLI, file, default."""
        if cli_value is not None:
            return cli_value
        raw = self._values.get((section, key))
        if raw is not None:
            if kind is None:
                kind = type(default) if default is not None else str
            return self._coerce(raw, kind)
        return default
