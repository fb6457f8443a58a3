"""LTL formulas over a finite observation set.

Provides the AST, an ASCII parser/printer, negation normal form, and exact
evaluation of formulas on ultimately periodic (lasso) words.  The lasso
evaluator is the semantic reference that the automaton translation is
checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Sequence


class Formula:
    """Base class for LTL syntax nodes."""

    def atoms(self) -> frozenset[str]:
        out: set[str] = set()
        _collect_atoms(self, out)
        return frozenset(out)

    def is_propositional(self) -> bool:
        return _is_propositional(self)

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class TrueConst(Formula):
    pass


@dataclass(frozen=True)
class FalseConst(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


TRUE = TrueConst()
FALSE = FalseConst()

_UNARY = (Not, Next, Eventually, Always)
_BINARY = (And, Or, Implies, Until, Release)


def _collect_atoms(f: Formula, out: set[str]) -> None:
    if isinstance(f, Atom):
        out.add(f.name)
    elif isinstance(f, _UNARY):
        _collect_atoms(f.child, out)
    elif isinstance(f, _BINARY):
        _collect_atoms(f.left, out)
        _collect_atoms(f.right, out)


def _is_propositional(f: Formula) -> bool:
    if isinstance(f, (Atom, TrueConst, FalseConst)):
        return True
    if isinstance(f, Not):
        return _is_propositional(f.child)
    if isinstance(f, (And, Or, Implies)):
        return _is_propositional(f.left) and _is_propositional(f.right)
    return False


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class LtlSyntaxError(ValueError):
    """Malformed formula text; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownPropositionError(ValueError):
    """Atomic proposition not in the declared observation set."""

    def __init__(self, name: str, position: int):
        super().__init__(f"unknown proposition '{name}' (at position {position})")
        self.name = name
        self.position = position


_RESERVED = {"X", "U", "R", "F", "G", "true", "false"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Returns (kind, value, position) triples; kind is 'op', 'name' or 'lit'."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("->", i):
            tokens.append(("op", "->", i))
            i += 2
            continue
        if c in "!&|()":
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in ("true", "false"):
                tokens.append(("lit", word, i))
            elif word in _RESERVED:
                tokens.append(("op", word, i))
            else:
                tokens.append(("name", word, i))
            i = j
            continue
        raise LtlSyntaxError(f"unexpected character '{c}'", i)
    return tokens


class _Parser:
    """Recursive descent over the precedence ladder.

    Tightest first: unary (! X F G), then U/R (right-assoc), &, |,
    -> (right-assoc).
    """

    def __init__(self, text: str, pi: FrozenSet[str] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.pi = pi

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise LtlSyntaxError("unexpected end of input", len(self.text))
        self.pos += 1
        return tok

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value:
            raise LtlSyntaxError(f"expected '{value}', found '{tok[1]}'", tok[2])

    def parse(self) -> Formula:
        f = self.parse_implies()
        tok = self.peek()
        if tok is not None:
            raise LtlSyntaxError(f"unexpected token '{tok[1]}'", tok[2])
        return f

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        tok = self.peek()
        if tok and tok[1] == "->":
            self.take()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while True:
            tok = self.peek()
            if tok and tok[1] == "|":
                self.take()
                f = Or(f, self.parse_and())
            else:
                return f

    def parse_and(self) -> Formula:
        f = self.parse_until()
        while True:
            tok = self.peek()
            if tok and tok[1] == "&":
                self.take()
                f = And(f, self.parse_until())
            else:
                return f

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        tok = self.peek()
        if tok and tok[1] in ("U", "R"):
            self.take()
            right = self.parse_until()
            return Until(left, right) if tok[1] == "U" else Release(left, right)
        return left

    def parse_unary(self) -> Formula:
        tok = self.take()
        kind, value, position = tok
        if kind == "op":
            if value == "!":
                return Not(self.parse_unary())
            if value == "X":
                return Next(self.parse_unary())
            if value == "F":
                return Eventually(self.parse_unary())
            if value == "G":
                return Always(self.parse_unary())
            if value == "(":
                f = self.parse_implies()
                self.expect(")")
                return f
            raise LtlSyntaxError(f"unexpected token '{value}'", position)
        if kind == "lit":
            return TRUE if value == "true" else FALSE
        if self.pi is not None and value not in self.pi:
            raise UnknownPropositionError(value, position)
        return Atom(value)


def parse_ltl(text: str, pi: Iterable[str] | None = None) -> Formula:
    """Parse formula text over the observation set ``pi``.

    Raises LtlSyntaxError on malformed input and UnknownPropositionError
    for atoms outside ``pi``.  With ``pi=None`` any identifier is accepted.
    """
    frozen = frozenset(pi) if pi is not None else None
    return _Parser(text, frozen).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_LEVEL_ATOM, _LEVEL_UNARY, _LEVEL_UNTIL, _LEVEL_AND, _LEVEL_OR, _LEVEL_IMPLIES = range(6)


def _level(f: Formula) -> int:
    if isinstance(f, (Atom, TrueConst, FalseConst)):
        return _LEVEL_ATOM
    if isinstance(f, _UNARY):
        return _LEVEL_UNARY
    if isinstance(f, (Until, Release)):
        return _LEVEL_UNTIL
    if isinstance(f, And):
        return _LEVEL_AND
    if isinstance(f, Or):
        return _LEVEL_OR
    return _LEVEL_IMPLIES


def _wrap(f: Formula, maxlevel: int) -> str:
    s = format_formula(f)
    return s if _level(f) <= maxlevel else f"({s})"


def format_formula(f: Formula) -> str:
    """Canonical text; parse(format_formula(f)) is structurally equal to f."""
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, FalseConst):
        return "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Next):
        return "X " + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Eventually):
        return "F " + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Always):
        return "G " + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Until):
        return f"{_wrap(f.left, _LEVEL_UNARY)} U {_wrap(f.right, _LEVEL_UNTIL)}"
    if isinstance(f, Release):
        return f"{_wrap(f.left, _LEVEL_UNARY)} R {_wrap(f.right, _LEVEL_UNTIL)}"
    if isinstance(f, And):
        return f"{_wrap(f.left, _LEVEL_AND)} & {_wrap(f.right, _LEVEL_AND - 1)}"
    if isinstance(f, Or):
        return f"{_wrap(f.left, _LEVEL_OR)} | {_wrap(f.right, _LEVEL_OR - 1)}"
    if isinstance(f, Implies):
        return f"{_wrap(f.left, _LEVEL_OR)} -> {_wrap(f.right, _LEVEL_IMPLIES)}"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Negation normal form
# ---------------------------------------------------------------------------

def to_nnf(f: Formula) -> Formula:
    """Push negations down to atoms; rewrite F/G through U and R.

    The result uses only literals, &, |, X, U and R, and is language
    equivalent to the input.
    """
    if isinstance(f, (TrueConst, FalseConst, Atom)):
        return f
    if isinstance(f, Not):
        return _nnf_neg(f.child)
    if isinstance(f, And):
        return And(to_nnf(f.left), to_nnf(f.right))
    if isinstance(f, Or):
        return Or(to_nnf(f.left), to_nnf(f.right))
    if isinstance(f, Implies):
        return Or(_nnf_neg(f.left), to_nnf(f.right))
    if isinstance(f, Next):
        return Next(to_nnf(f.child))
    if isinstance(f, Eventually):
        return Until(TRUE, to_nnf(f.child))
    if isinstance(f, Always):
        return Release(FALSE, to_nnf(f.child))
    if isinstance(f, Until):
        return Until(to_nnf(f.left), to_nnf(f.right))
    if isinstance(f, Release):
        return Release(to_nnf(f.left), to_nnf(f.right))
    raise TypeError(f"not a formula: {f!r}")


def _nnf_neg(f: Formula) -> Formula:
    """NNF of the negation of f."""
    if isinstance(f, TrueConst):
        return FALSE
    if isinstance(f, FalseConst):
        return TRUE
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, Not):
        return to_nnf(f.child)
    if isinstance(f, And):
        return Or(_nnf_neg(f.left), _nnf_neg(f.right))
    if isinstance(f, Or):
        return And(_nnf_neg(f.left), _nnf_neg(f.right))
    if isinstance(f, Implies):
        return And(to_nnf(f.left), _nnf_neg(f.right))
    if isinstance(f, Next):
        return Next(_nnf_neg(f.child))
    if isinstance(f, Eventually):
        return Release(FALSE, _nnf_neg(f.child))
    if isinstance(f, Always):
        return Until(TRUE, _nnf_neg(f.child))
    if isinstance(f, Until):
        return Release(_nnf_neg(f.left), _nnf_neg(f.right))
    if isinstance(f, Release):
        return Until(_nnf_neg(f.left), _nnf_neg(f.right))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Lasso words and exact LTL semantics on them
# ---------------------------------------------------------------------------

Obs = FrozenSet[str]


@dataclass(frozen=True)
class LassoWord:
    """Ultimately periodic word prefix . cycle^omega over 2^Pi."""

    prefix: tuple[Obs, ...]
    cycle: tuple[Obs, ...]

    def __post_init__(self):
        if len(self.cycle) < 1:
            raise ValueError("lasso cycle must be nonempty")

    @staticmethod
    def make(prefix: Sequence[Iterable[str]], cycle: Sequence[Iterable[str]]) -> "LassoWord":
        return LassoWord(
            tuple(frozenset(o) for o in prefix),
            tuple(frozenset(o) for o in cycle),
        )

    def letter(self, j: int) -> Obs:
        if j < len(self.prefix):
            return self.prefix[j]
        return self.cycle[(j - len(self.prefix)) % len(self.cycle)]

    @property
    def period_start(self) -> int:
        return len(self.prefix)

    @property
    def positions(self) -> int:
        """Number of distinct suffix positions (prefix + one cycle unrolling)."""
        return len(self.prefix) + len(self.cycle)


def eval_prop(f: Formula, obs: Iterable[str]) -> bool:
    """Evaluate a propositional formula against one observation set."""
    o = obs if isinstance(obs, (set, frozenset)) else frozenset(obs)
    if isinstance(f, TrueConst):
        return True
    if isinstance(f, FalseConst):
        return False
    if isinstance(f, Atom):
        return f.name in o
    if isinstance(f, Not):
        return not eval_prop(f.child, o)
    if isinstance(f, And):
        return eval_prop(f.left, o) and eval_prop(f.right, o)
    if isinstance(f, Or):
        return eval_prop(f.left, o) or eval_prop(f.right, o)
    if isinstance(f, Implies):
        return (not eval_prop(f.left, o)) or eval_prop(f.right, o)
    raise ValueError(f"not a propositional formula: {f}")


def eval_on_lasso(f: Formula, w: LassoWord) -> bool:
    """Exact LTL satisfaction of prefix . cycle^omega, decided by fixpoint
    over the finitely many distinct suffix positions."""
    memo: dict[Formula, list[bool]] = {}
    return _eval_positions(f, w, memo)[0]


def _eval_positions(f: Formula, w: LassoWord, memo: dict) -> list[bool]:
    cached = memo.get(f)
    if cached is not None:
        return cached
    m = w.positions
    start = w.period_start
    clen = len(w.cycle)

    def wrap(j: int) -> int:
        # successor position; the last position loops back to the cycle start
        return j + 1 if j + 1 < m else start

    if isinstance(f, TrueConst):
        res = [True] * m
    elif isinstance(f, FalseConst):
        res = [False] * m
    elif isinstance(f, Atom):
        res = [f.name in w.letter(j) for j in range(m)]
    elif isinstance(f, Not):
        res = [not v for v in _eval_positions(f.child, w, memo)]
    elif isinstance(f, And):
        a = _eval_positions(f.left, w, memo)
        b = _eval_positions(f.right, w, memo)
        res = [x and y for x, y in zip(a, b)]
    elif isinstance(f, Or):
        a = _eval_positions(f.left, w, memo)
        b = _eval_positions(f.right, w, memo)
        res = [x or y for x, y in zip(a, b)]
    elif isinstance(f, Implies):
        a = _eval_positions(f.left, w, memo)
        b = _eval_positions(f.right, w, memo)
        res = [(not x) or y for x, y in zip(a, b)]
    elif isinstance(f, Next):
        c = _eval_positions(f.child, w, memo)
        res = [c[wrap(j)] for j in range(m)]
    elif isinstance(f, (Until, Eventually)):
        if isinstance(f, Until):
            a = _eval_positions(f.left, w, memo)
            b = _eval_positions(f.right, w, memo)
        else:
            a = [True] * m
            b = _eval_positions(f.child, w, memo)
        res = [False] * m
        # on the cycle a scan of one full period decides the least fixpoint
        for j in range(start, m):
            pos = j
            for _ in range(clen):
                if b[pos]:
                    res[j] = True
                    break
                if not a[pos]:
                    break
                pos = wrap(pos)
        for j in range(start - 1, -1, -1):
            res[j] = b[j] or (a[j] and res[j + 1])
    elif isinstance(f, (Release, Always)):
        if isinstance(f, Release):
            a = _eval_positions(f.left, w, memo)
            b = _eval_positions(f.right, w, memo)
        else:
            a = [False] * m
            b = _eval_positions(f.child, w, memo)
        res = [False] * m
        # greatest fixpoint: b must hold up to and including a position with a,
        # or forever around the cycle
        for j in range(start, m):
            pos = j
            ok = True
            for _ in range(clen):
                if not b[pos]:
                    ok = False
                    break
                if a[pos]:
                    break
                pos = wrap(pos)
            res[j] = ok
        for j in range(start - 1, -1, -1):
            res[j] = b[j] and (a[j] or res[j + 1])
    else:
        raise TypeError(f"not a formula: {f!r}")
    memo[f] = res
    return res
