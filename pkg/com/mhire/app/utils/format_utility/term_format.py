import logging
import re
from typing import List, Optional, Tuple

from com.mhire.app.common.errors import DomainError, ParseError
from com.mhire.app.services.disconnection_engine.disconnection_engine import Generator, Kind, Term
from com.mhire.app.utils.format_utility.graph_format import read_text

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z0-9_.'\-]+)|(?P<punct>[~;()|,>])|(?P<bad>\S))")

Token = Tuple[str, str, int]


def _tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None or match.end() == position:
            break
        if match.group("bad") is not None:
            raise ParseError(f"unexpected character {match.group('bad')!r}", position=match.start("bad") + 1)
        kind = "name" if match.group("name") is not None else "punct"
        tokens.append((kind, match.group(kind), match.start(kind) + 1))
        position = match.end()
    return tokens


class _TermParser:

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def _peek(self) -> Optional[Token]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def _position(self) -> int:
        token = self._peek()
        return token[2] if token else len(self.text.rstrip()) + 1

    def _expect(self, value: str) -> None:
        token = self._peek()
        if token is None or token[0] != "punct" or token[1] != value:
            found = repr(token[1]) if token else "end of input"
            raise ParseError(f"expected {value!r}, found {found}", position=self._position())
        self.index += 1

    def _name(self) -> str:
        token = self._peek()
        if token is None or token[0] != "name":
            found = repr(token[1]) if token else "end of input"
            raise ParseError(f"expected a vertex name, found {found}", position=self._position())
        self.index += 1
        return token[1]

    def _names(self, separator_after: List[str]) -> List[str]:
        names = [self._name()]
        for separator in separator_after:
            self._expect(separator)
            names.append(self._name())
        return names

    def _generator(self) -> Generator:
        start = self._position()
        bar = False
        if self._peek() and self._peek()[1] == "~":
            bar = True
            self.index += 1
        head = self._name()
        if head == "id":
            if bar:
                raise ParseError("identity has no connection form", position=start)
            return Generator(Kind.ID)
        self._expect("(")
        if head == "S" and not bar:
            (u,) = self._names([])
            generator = (Kind.TOUCH, dict(u=u))
        elif head == "R" and not bar:
            u, v = self._names([">"])
            generator = (Kind.RENAME, dict(u=u, v=v))
        elif head == "E":
            u = self._name()
            token = self._peek()
            if token and token[1] == "|":
                self.index += 1
                a, b = self._names([","])
                generator = (Kind.E_NEG, dict(u=u, a=a, b=b))
            else:
                self._expect(",")
                generator = (Kind.E_POS, dict(u=u, v=self._name()))
        elif head == "I":
            u, v = self._names([","])
            generator = (Kind.ION, dict(u=u, v=v))
        elif head == "C":
            u, v, a, b = self._names([",", "|", ","])
            generator = (Kind.COV, dict(u=u, v=v, a=a, b=b))
        else:
            raise ParseError(f"unknown generator {'~' if bar else ''}{head}", position=start)
        self._expect(")")
        kind, slots = generator
        try:
            return Generator(kind, bar=bar, **slots)
        except DomainError as e:
            raise ParseError(e.detail, position=start)

    def parse(self) -> Term:
        if not self.tokens:
            raise ParseError("empty term", position=1)
        generators = [self._generator()]
        while self._peek() is not None:
            self._expect(";")
            generators.append(self._generator())
        return Term(tuple(g for g in generators if g.kind != Kind.ID))


def parse_term(text: str) -> Term:
    return _TermParser(text).parse()


def print_term(t: Term) -> str:
    return str(t)


def load_term(path) -> Term:
    """A term file holds one term, possibly spread over several lines."""
    text = " ".join(line.split("#", 1)[0] for line in read_text(path).splitlines())
    return parse_term(text)


def load_terms(path) -> List[Term]:
    """One term per non-blank line."""
    terms: List[Term] = []
    for number, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            terms.append(parse_term(line))
        except ParseError as e:
            raise ParseError(e.message, line=number, position=e.position)
    logger.info(f"Loaded {len(terms)} terms from {path}")
    return terms
