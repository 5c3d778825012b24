"""Flat key=value config files for the CLI.

One `key = value` pair per line; blank lines and lines starting with # are
skipped. Every consumer pops the keys it understands and then calls
finish(), so a misspelled key is an error instead of a silent default.
"""

from __future__ import annotations

from .errors import ConfigError, DataFormatError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigMap:
    def __init__(self, pairs: dict, source: str = "<config>"):
        self._pairs = dict(pairs)
        self._source = source

    def _pop(self, key, default):
        if key in self._pairs:
            return self._pairs.pop(key)
        return default

    def get_str(self, key: str, default=None):
        v = self._pop(key, default)
        if v is None:
            raise ConfigError(f"{self._source}: missing required key {key!r}")
        return v

    def get_int(self, key: str, default=None) -> int:
        v = self.get_str(key, None if default is None else str(default))
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"{self._source}: key {key!r} needs an integer, got {v!r}") from None

    def get_float(self, key: str, default=None) -> float:
        v = self.get_str(key, None if default is None else repr(float(default)))
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{self._source}: key {key!r} needs a number, got {v!r}") from None

    def get_bool(self, key: str, default=None) -> bool:
        v = self.get_str(key, None if default is None else str(default).lower())
        low = str(v).strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{self._source}: key {key!r} needs true/false, got {v!r}")

    def has(self, key: str) -> bool:
        return key in self._pairs

    def finish(self):
        if self._pairs:
            stray = ", ".join(sorted(self._pairs))
            raise ConfigError(f"{self._source}: unknown keys: {stray}")


def parse_kv_text(text: str, source: str = "<config>") -> ConfigMap:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise DataFormatError(f"expected 'key = value', got {raw!r}", line=lineno)
        key = key.strip()
        if key in pairs:
            raise DataFormatError(f"duplicate key {key!r}", line=lineno)
        pairs[key] = value.strip()
    return ConfigMap(pairs, source)


def load_kv_file(path) -> ConfigMap:
    with open(path, "r", encoding="utf-8") as f:
        return parse_kv_text(f.read(), source=str(path))
