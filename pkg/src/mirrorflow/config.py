"""key = value run configuration, merged with command-line flags.

Precedence is built-in default < config file < flag.  Floats are parsed from
their decimal text and echoed with ``repr`` so a resolved config reproduces
the run bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError


def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"not a finite number: {text!r}")
    return v


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def _floats(text: str) -> list[float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise ConfigError("empty number list")
    return [_float(p) for p in parts]


def _ints(text: str) -> list[int]:
    return [_int(p) for p in text.replace(" ", "").split(",") if p]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


PARSERS: dict[str, Callable[[str], Any]] = {
    "float": _float,
    "int": _int,
    "str": str,
    "floats": _floats,
    "ints": _ints,
    "bool": _bool,
}


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class Option:
    name: str
    kind: str
    default: Any = None
    help: str = ""
    required: bool = False
    choices: tuple | None = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def parse(self, text: str) -> Any:
        v = PARSERS[self.kind](text)
        if self.choices is not None and v not in self.choices:
            raise ConfigError(f"{self.name} must be one of {', '.join(map(str, self.choices))}, got {v!r}")
        return v


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Later keys win."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(options: list[Option], file_values: dict[str, str], flag_values: dict[str, str]) -> dict[str, Any]:
    known = {o.name: o for o in options}
    unknown = sorted(set(file_values) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    resolved: dict[str, Any] = {}
    for o in options:
        if o.name in flag_values and flag_values[o.name] is not None:
            resolved[o.name] = o.parse(flag_values[o.name])
        elif o.name in file_values:
            resolved[o.name] = o.parse(file_values[o.name])
        elif o.required:
            raise ConfigError(f"missing required setting {o.name} (flag {o.flag})")
        else:
            resolved[o.name] = o.default
    return resolved


def echo(command: str, resolved: dict[str, Any]) -> str:
    """Byte-stable text of the resolved settings, readable back by :func:`read_config`."""
    lines = [f"# mirrorflow {command}"]
    for key in sorted(resolved):
        v = resolved[key]
        if v is None:
            continue
        lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
