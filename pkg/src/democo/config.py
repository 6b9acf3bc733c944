"""Plain key/value configuration with CLI-flag overrides.

Files contain `key = value` lines; `#` starts a comment. Precedence is
CLI flag > config file > built-in default, resolved by the CLI layer.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def cfg_float(cfg: dict[str, str], key: str, default: float) -> float:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {cfg[key]!r}") from exc


def cfg_int(cfg: dict[str, str], key: str, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {cfg[key]!r}") from exc


def cfg_bool(cfg: dict[str, str], key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {cfg[key]!r}")


def cfg_phases(cfg: dict[str, str], key: str) -> list[tuple[str, int]] | None:
    """Parse a curriculum override like `gold:2,distant:1`."""
    if key not in cfg:
        return None
    phases = []
    for part in cfg[key].split(","):
        part = part.strip()
        if not part:
            continue
        try:
            tag, epochs = part.split(":")
            phases.append((tag.strip(), int(epochs)))
        except ValueError as exc:
            raise ConfigError(f"{key}: bad phase {part!r}") from exc
    if not phases:
        raise ConfigError(f"{key}: no phases given")
    return phases
