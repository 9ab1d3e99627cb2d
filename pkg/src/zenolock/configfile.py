"""Flat key-value run configuration with one section per subcommand.

The format is deliberately trivial to parse from any language:

    # comment
    [section]
    key = value

Values are plain scalars or comma-separated lists; types are enforced at
lookup time with line-numbered diagnostics.
"""

from dataclasses import dataclass


class ConfigError(ValueError):
    """Malformed configuration; the message carries file/line context."""


@dataclass(frozen=True)
class ConfigEntry:
    value: str
    line: int


def parse_config_text(text: str, source: str = "<config>") -> dict:
    sections: dict = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"{source}:{number}: empty section name")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"{source}:{number}: key outside of any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{source}:{number}: empty key")
        if key in current:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r}")
        current[key] = ConfigEntry(value, number)
    return sections


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as error:
        raise ConfigError(f"cannot read config file {path}: {error}") from error
    return parse_config_text(text, source=str(path))


class Section:
    """Typed accessor over one parsed section merged with defaults."""

    def __init__(self, name: str, entries: dict, defaults: dict, source: str):
        self.name = name
        self.source = source
        unknown = set(entries) - set(defaults)
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(
                f"{source}:{entries[key].line}: unknown key {key!r} in [{name}]")
        self._defaults = defaults
        self._entries = entries

    def _raw(self, key: str):
        if key in self._entries:
            entry = self._entries[key]
            return entry.value, f"{self.source}:{entry.line}"
        return self._defaults[key], f"[{self.name}] default"

    def _convert(self, key: str, converter, kind: str):
        raw, where = self._raw(key)
        if raw is None:
            return None
        if isinstance(raw, str):
            try:
                return converter(raw)
            except (TypeError, ValueError) as error:
                raise ConfigError(
                    f"{where}: field {key!r} needs {kind}, got {raw!r}") from error
        return raw

    def get_float(self, key: str):
        return self._convert(key, float, "a number")

    def get_int(self, key: str):
        return self._convert(key, lambda v: int(v, 0), "an integer")

    def get_bool(self, key: str):
        def parse(v):
            lowered = v.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(v)
        return self._convert(key, parse, "a boolean")

    def get_float_list(self, key: str):
        def parse(v):
            items = [part.strip() for part in v.split(",") if part.strip()]
            if not items:
                raise ValueError(v)
            return tuple(float(part) for part in items)
        return self._convert(key, parse, "a comma-separated number list")

    def get_str(self, key: str):
        raw, _ = self._raw(key)
        return raw

    def resolved(self) -> dict:
        out = {}
        for key in sorted(self._defaults):
            raw, _ = self._raw(key)
            out[key] = raw
        return out
