import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, Optional

from com.mhire.app.common.errors import ConfigurationError
from com.mhire.app.config.config import Config

logger = logging.getLogger(__name__)

ALPHA = "alpha"

DEFAULT_VALENCES: Dict[str, int] = {
    "H": 1,
    "C": 4,
    "N": 3,
    "O": 2,
    "P": 5,
    "S": 2,
    "Cl": 1,
    "Na": 1,
    ALPHA: 1,
}


class ValenceTable:
    """Map from atom symbol to valence. The binding-site symbol always has valence 1."""

    def __init__(self, valences: Optional[Dict[str, int]] = None):
        table = dict(DEFAULT_VALENCES if valences is None else valences)
        table.setdefault(ALPHA, 1)
        if table[ALPHA] != 1:
            raise ConfigurationError(f"valence of {ALPHA} must be 1, got {table[ALPHA]}")
        if len([s for s in table if s != ALPHA]) < 2:
            raise ConfigurationError("valence table needs at least two element symbols")
        for symbol, valence in table.items():
            if valence < 0:
                raise ConfigurationError(f"negative valence for {symbol}")
        self._valences = table

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._valences

    def __getitem__(self, symbol: str) -> int:
        try:
            return self._valences[symbol]
        except KeyError:
            raise ConfigurationError(f"unknown atom symbol {symbol!r}")

    def __eq__(self, other) -> bool:
        return isinstance(other, ValenceTable) and self._valences == other._valences

    def symbols(self) -> Iterable[str]:
        return sorted(self._valences)

    @classmethod
    def from_text(cls, text: str) -> "ValenceTable":
        valences: Dict[str, int] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"malformed valence line {number}: {raw!r}")
            symbol, value = (part.strip() for part in line.split("=", 1))
            try:
                valences[symbol] = int(value)
            except ValueError:
                raise ConfigurationError(f"malformed valence on line {number}: {value!r}")
        return cls(valences)

    @classmethod
    def from_file(cls, path) -> "ValenceTable":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read valence file {path}: {e}")
        logger.info(f"Loaded valence table from {path}")
        return cls.from_text(text)

    @classmethod
    def from_config(cls) -> "ValenceTable":
        return _table_for(Config().valence_file)


@lru_cache(maxsize=8)
def _table_for(path: Optional[str]) -> ValenceTable:
    if path:
        return ValenceTable.from_file(path)
    return ValenceTable()
