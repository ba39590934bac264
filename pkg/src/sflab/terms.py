"""Untyped lambda-calculus core.

Terms are locally nameless: bound variables are de Bruijn indices into the
enclosing abstractions, free variables carry their surface name.  Binder
hints are kept for printing but excluded from equality, so structural
equality *is* alpha-equivalence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterator

DEFAULT_NORMALIZE_FUEL = 10_000
DEFAULT_SN_FUEL = 100_000


class TermError(Exception):
    pass


class ParseError(TermError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class NotSNError(TermError):
    """Raised by operations whose argument must be strongly normalizing."""


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Var(Term):
    """Bound variable (int de Bruijn index) or free variable (str name)."""

    ref: int | str


@dataclass(frozen=True)
class Lam(Term):
    hint: str = field(compare=False)
    body: Term = None  # type: ignore[assignment]


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


class ReductionKind(Enum):
    BETA = "beta"
    ETA = "eta"
    BETA_ETA = "betaeta"
    WEAK_HEAD = "wh"


@dataclass(frozen=True)
class NormalizeOutcome:
    result: Term | None
    steps: int
    exhausted: bool


@dataclass(frozen=True)
class SnVerdict:
    verdict: str  # "yes" | "no" | "unknown"
    witness: Term | None = None
    explored: int = 0

    @property
    def is_yes(self) -> bool:
        return self.verdict == "yes"

    @property
    def is_no(self) -> bool:
        return self.verdict == "no"


@dataclass(frozen=True)
class TermClass:
    neutral: bool
    value: bool
    beta_normal: bool
    nn: bool


# ---------------------------------------------------------------------------
# Structure


def size(t: Term) -> int:
    """Node count: variable occurrences + abstractions + applications."""
    match t:
        case Var():
            return 1
        case Lam(_, body):
            return 1 + size(body)
        case App(fn, arg):
            return 1 + size(fn) + size(arg)
    raise TypeError(t)


def free_names(t: Term) -> frozenset[str]:
    match t:
        case Var(ref):
            return frozenset([ref]) if isinstance(ref, str) else frozenset()
        case Lam(_, body):
            return free_names(body)
        case App(fn, arg):
            return free_names(fn) | free_names(arg)
    raise TypeError(t)


def is_locally_closed(t: Term, depth: int = 0) -> bool:
    """True when every bound reference resolves within the term itself."""
    match t:
        case Var(ref):
            return not isinstance(ref, int) or ref < depth
        case Lam(_, body):
            return is_locally_closed(body, depth + 1)
        case App(fn, arg):
            return is_locally_closed(fn, depth) and is_locally_closed(arg, depth)
    raise TypeError(t)


def is_closed(t: Term) -> bool:
    return not free_names(t) and is_locally_closed(t)


def _open(t: Term, depth: int, repl: Term) -> Term:
    """Replace index `depth` by `repl` and shift the indices above it down.

    `repl` must be locally closed, so it never needs adjusting under binders.
    """
    match t:
        case Var(ref):
            if isinstance(ref, int):
                if ref == depth:
                    return repl
                if ref > depth:
                    return Var(ref - 1)
            return t
        case Lam(hint, body):
            return Lam(hint, _open(body, depth + 1, repl))
        case App(fn, arg):
            return App(_open(fn, depth, repl), _open(arg, depth, repl))
    raise TypeError(t)


def open_with(lam: Lam, repl: Term) -> Term:
    return _open(lam.body, 0, repl)


def close_over(t: Term, name: str, depth: int = 0) -> Term:
    """Turn free occurrences of `name` into references to a binder at `depth`."""
    match t:
        case Var(ref):
            return Var(depth) if ref == name else t
        case Lam(hint, body):
            return Lam(hint, close_over(body, name, depth + 1))
        case App(fn, arg):
            return App(close_over(fn, name, depth), close_over(arg, name, depth))
    raise TypeError(t)


def lam(name: str, body: Term) -> Term:
    """Abstract the free variable `name` out of `body`."""
    return Lam(name, close_over(body, name))


def substitute(body: Term, replacement: Term, target: str) -> Term:
    """Capture-avoiding substitution of `replacement` for free `target`.

    Binders are nameless, so free names of the replacement can never be
    captured; renaming only ever happens in the printer.
    """
    match body:
        case Var(ref):
            return replacement if ref == target else body
        case Lam(hint, inner):
            return Lam(hint, substitute(inner, replacement, target))
        case App(fn, arg):
            return App(substitute(fn, replacement, target), substitute(arg, replacement, target))
    raise TypeError(body)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    match t:
        case Lam(_, body):
            yield from subterms(body)
        case App(fn, arg):
            yield from subterms(fn)
            yield from subterms(arg)


# ---------------------------------------------------------------------------
# Parsing and printing

_TOKEN = re.compile(r"\s*(\\|λ|\.|\(|\)|[a-z][a-zA-Z0-9_]*)")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", pos)
            break
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


def parse(text: str) -> Term:
    """Parse `\\x.body` / application / parenthesized atoms; `\\` is lambda."""
    tokens = _tokenize(text)
    idx = 0

    def peek() -> str | None:
        return tokens[idx][0] if idx < len(tokens) else None

    def pos() -> int:
        return tokens[idx][1] if idx < len(tokens) else len(text)

    def expect(tok: str) -> None:
        nonlocal idx
        if peek() != tok:
            raise ParseError(f"expected {tok!r}", pos())
        idx += 1

    def parse_term(env: tuple[str, ...]) -> Term:
        nonlocal idx
        if peek() in ("\\", "λ"):
            idx += 1
            name = peek()
            if name is None or name in ("\\", "λ", ".", "(", ")"):
                raise ParseError("expected binder name", pos())
            idx += 1
            expect(".")
            body = parse_term((name,) + env)
            return Lam(name, body)
        return parse_app(env)

    def parse_app(env: tuple[str, ...]) -> Term:
        t = parse_atom(env)
        while peek() is not None and peek() not in (")",):
            if peek() == ".":
                raise ParseError("unexpected '.'", pos())
            t = App(t, parse_atom(env))
        return t

    def parse_atom(env: tuple[str, ...]) -> Term:
        nonlocal idx
        tok = peek()
        if tok == "(":
            idx += 1
            t = parse_term(env)
            expect(")")
            return t
        if tok in ("\\", "λ"):
            return parse_term(env)
        if tok is None or tok in (".", ")"):
            raise ParseError("expected a term", pos())
        idx += 1
        if tok in env:
            return Var(env.index(tok))
        return Var(tok)

    result = parse_term(())
    if idx != len(tokens):
        raise ParseError(f"trailing input {tokens[idx][0]!r}", tokens[idx][1])
    return result


def render(t: Term) -> str:
    """Canonical printer; parse(render(t)) is alpha-identical to t."""

    def fresh(hint: str, avoid: frozenset[str]) -> str:
        base = hint if hint else "x"
        if base not in avoid:
            return base
        n = 1
        while f"{base}{n}" in avoid:
            n += 1
        return f"{base}{n}"

    def go(t: Term, env: tuple[str, ...], ctx: str) -> str:
        match t:
            case Var(ref):
                return env[ref] if isinstance(ref, int) else ref
            case Lam(hint, body):
                # The binder must not shadow a name the body mentions freely,
                # nor an outer binder the body refers to.
                used = free_names(body) | _referenced_outer(body, env)
                name = fresh(hint, used)
                s = f"\\{name}.{go(body, (name,) + env, 'body')}"
                return f"({s})" if ctx in ("fn", "arg") else s
            case App(fn, arg):
                s = f"{go(fn, env, 'fn')} {go(arg, env, 'arg')}"
                return f"({s})" if ctx == "arg" else s
        raise TypeError(t)

    def _referenced_outer(body: Term, env: tuple[str, ...]) -> frozenset[str]:
        names = set()

        def walk(t: Term, depth: int) -> None:
            match t:
                case Var(ref):
                    if isinstance(ref, int) and ref > depth and ref - depth - 1 < len(env):
                        names.add(env[ref - depth - 1])
                case Lam(_, b):
                    walk(b, depth + 1)
                case App(fn, arg):
                    walk(fn, depth)
                    walk(arg, depth)

        walk(body, 0)
        return frozenset(names)

    return go(t, (), "top")


# ---------------------------------------------------------------------------
# Reduction

def _beta_contract(fn: Lam, arg: Term) -> Term:
    return _open(fn.body, 0, arg)


def _eta_contract(t: Lam) -> Term | None:
    """λx.M x -> M when x does not occur in M."""
    match t.body:
        case App(fn, Var(0)) if not _uses_index(fn, 0):
            return _unshift(fn, 0)
    return None


def _uses_index(t: Term, depth: int) -> bool:
    match t:
        case Var(ref):
            return ref == depth if isinstance(ref, int) else False
        case Lam(_, body):
            return _uses_index(body, depth + 1)
        case App(fn, arg):
            return _uses_index(fn, depth) or _uses_index(arg, depth)
    raise TypeError(t)


def _unshift(t: Term, depth: int) -> Term:
    match t:
        case Var(ref):
            if isinstance(ref, int) and ref > depth:
                return Var(ref - 1)
            return t
        case Lam(hint, body):
            return Lam(hint, _unshift(body, depth + 1))
        case App(fn, arg):
            return App(_unshift(fn, depth), _unshift(arg, depth))
    raise TypeError(t)


def _one_step(t: Term, beta: bool, eta: bool) -> Iterator[Term]:
    """All one-step reducts, outermost-leftmost first."""
    match t:
        case Var():
            return
        case Lam(hint, body) as outer:
            if eta:
                contracted = _eta_contract(outer)
                if contracted is not None:
                    yield contracted
            for b in _one_step(body, beta, eta):
                yield Lam(hint, b)
        case App(fn, arg):
            if beta and isinstance(fn, Lam):
                yield _beta_contract(fn, arg)
            for f in _one_step(fn, beta, eta):
                yield App(f, arg)
            for a in _one_step(arg, beta, eta):
                yield App(fn, a)


def wh_reduct(t: Term) -> Term | None:
    """The weak-head reduct (λx.P)Q Q1..Qn -> P[Q/x] Q1..Qn, if any."""
    spine = []
    head = t
    while isinstance(head, App):
        spine.append(head.arg)
        head = head.fn
    if isinstance(head, Lam) and spine:
        out = _beta_contract(head, spine[-1])
        for a in reversed(spine[:-1]):
            out = App(out, a)
        return out
    return None


def reducts(t: Term, kind: ReductionKind) -> list[Term]:
    """One-step reducts under `kind`, deduplicated, deterministic order."""
    if kind is ReductionKind.WEAK_HEAD:
        r = wh_reduct(t)
        return [r] if r is not None else []
    beta = kind in (ReductionKind.BETA, ReductionKind.BETA_ETA)
    eta = kind in (ReductionKind.ETA, ReductionKind.BETA_ETA)
    seen: dict[Term, None] = {}
    for r in _one_step(t, beta, eta):
        seen.setdefault(r, None)
    return list(seen)


def normalize(t: Term, kind: ReductionKind, fuel: int = DEFAULT_NORMALIZE_FUEL) -> NormalizeOutcome:
    """Leftmost-outermost normalization; beta-eta runs beta first, then eta."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    steps = 0

    def run(t: Term, beta: bool, eta: bool) -> Term | None:
        nonlocal steps
        while True:
            nxt = next(_one_step(t, beta, eta), None)
            if nxt is None:
                return t
            if steps >= fuel:
                return None
            steps += 1
            t = nxt

    if kind is ReductionKind.WEAK_HEAD:
        cur = t
        while True:
            nxt = wh_reduct(cur)
            if nxt is None:
                return NormalizeOutcome(cur, steps, False)
            if steps >= fuel:
                return NormalizeOutcome(None, steps, True)
            steps += 1
            cur = nxt
    if kind is ReductionKind.BETA_ETA:
        bnf = run(t, beta=True, eta=False)
        if bnf is None:
            return NormalizeOutcome(None, steps, True)
        enf = run(bnf, beta=False, eta=True)
        if enf is None:
            return NormalizeOutcome(None, steps, True)
        return NormalizeOutcome(enf, steps, False)
    beta = kind is ReductionKind.BETA
    nf = run(t, beta=beta, eta=not beta)
    if nf is None:
        return NormalizeOutcome(None, steps, True)
    return NormalizeOutcome(nf, steps, False)


def beta_normal_form(t: Term, fuel: int = DEFAULT_NORMALIZE_FUEL) -> Term | None:
    return normalize(t, ReductionKind.BETA, fuel).result


def is_beta_normal(t: Term) -> bool:
    return next(_one_step(t, beta=True, eta=False), None) is None


def term_class(t: Term) -> TermClass:
    neutral = not isinstance(t, Lam)
    normal = is_beta_normal(t)
    return TermClass(neutral=neutral, value=not neutral, beta_normal=normal, nn=neutral and not normal)


def is_strongly_normalizing(t: Term, fuel: int = DEFAULT_SN_FUEL) -> SnVerdict:
    """Explore the beta-reduct graph depth-first.

    Yes: the whole reachable graph is finite and no term reoccurs on its own
    reduction path.  No: a reachable alpha-cycle, returned as witness.
    Unknown: node budget exhausted (never reported as No).
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    done: set[Term] = set()
    on_path: set[Term] = set()
    explored = 0
    # Stack of (term, iterator over remaining reducts).
    stack: list[tuple[Term, Iterator[Term]]] = [(t, iter(reducts(t, ReductionKind.BETA)))]
    on_path.add(t)
    explored += 1
    while stack:
        term, it = stack[-1]
        child = next(it, None)
        if child is None:
            stack.pop()
            on_path.discard(term)
            done.add(term)
            continue
        if child in done:
            continue
        if child in on_path:
            return SnVerdict("no", witness=child, explored=explored)
        if explored >= fuel:
            return SnVerdict("unknown", explored=explored)
        explored += 1
        on_path.add(child)
        stack.append((child, iter(reducts(child, ReductionKind.BETA))))
    return SnVerdict("yes", explored=explored)


def equiv(a: Term, b: Term, gamma: ReductionKind, fuel: int = DEFAULT_NORMALIZE_FUEL) -> bool | None:
    """Equality of gamma-normal forms; None when normalization runs out of fuel."""
    if gamma not in (ReductionKind.BETA, ReductionKind.BETA_ETA):
        raise ValueError("equivalence is defined for beta and beta-eta")
    na = normalize(a, gamma, fuel)
    nb = normalize(b, gamma, fuel)
    if na.exhausted or nb.exhausted:
        return None
    return na.result == nb.result


def reachable(t: Term, fuel: int = DEFAULT_SN_FUEL) -> set[Term]:
    """All beta-* reducts of t (t included); raises NotSNError when unbounded."""
    seen = {t}
    frontier = [t]
    while frontier:
        cur = frontier.pop()
        for r in reducts(cur, ReductionKind.BETA):
            if r not in seen:
                if len(seen) >= fuel:
                    raise NotSNError("reduct graph exceeds fuel")
                seen.add(r)
                frontier.append(r)
    return seen


def values_of(t: Term, fuel: int = DEFAULT_SN_FUEL) -> frozenset[Term]:
    """All abstraction-rooted beta-* reducts of a strongly normalizing term."""
    verdict = is_strongly_normalizing(t, fuel)
    if not verdict.is_yes:
        raise NotSNError(f"values_of requires a strongly normalizing term (got {verdict.verdict})")
    return frozenset(r for r in reachable(t, fuel) if isinstance(r, Lam))


def beta_reaches(a: Term, b: Term, fuel: int = DEFAULT_SN_FUEL) -> bool:
    """Does a ->beta* b?  Explores breadth-first up to `fuel` distinct terms."""
    if a == b:
        return True
    seen = {a}
    frontier = [a]
    while frontier:
        cur = frontier.pop()
        for r in reducts(cur, ReductionKind.BETA):
            if r == b:
                return True
            if r not in seen and len(seen) < fuel:
                seen.add(r)
                frontier.append(r)
    return False


# ---------------------------------------------------------------------------
# Combinators

def circ(m: Term, n: Term) -> Term:
    """Composition: λx.M (N x)."""
    return Lam("x", App(m, App(n, Var(0))))


def arrow_term(m: Term, n: Term) -> Term:
    """Arrow action on maps: λx.λy.N (x (M y))."""
    return Lam("x", Lam("y", App(n, App(Var(1), App(m, Var(0))))))


def identity() -> Term:
    return Lam("x", Var(0))


def church(n: int) -> Term:
    """Church numeral λf.λx.f(...(f x))."""
    body: Term = Var(0)
    for _ in range(n):
        body = App(Var(1), body)
    return Lam("f", Lam("x", body))


# ---------------------------------------------------------------------------
# Enumeration of closed beta-normal terms

@lru_cache(maxsize=None)
def _normal_forms(s: int, depth: int) -> tuple[Term, ...]:
    if s < 1:
        return ()
    out: list[Term] = list(_neutral_forms(s, depth))
    if s >= 2:
        out.extend(Lam("x", b) for b in _normal_forms(s - 1, depth + 1))
    return tuple(out)


@lru_cache(maxsize=None)
def _neutral_forms(s: int, depth: int) -> tuple[Term, ...]:
    if s == 1:
        return tuple(Var(i) for i in range(depth))
    out: list[Term] = []
    # Application: neutral function, normal argument.
    for a in range(1, s - 1):
        for fn in _neutral_forms(s - 1 - a, depth):
            for arg in _normal_forms(a, depth):
                out.append(App(fn, arg))
    return tuple(out)


def enumerate_closed_beta_normal(max_size: int) -> Iterator[Term]:
    """Closed beta-normal terms of size <= max_size, once each, size-major."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    for s in range(1, max_size + 1):
        yield from _normal_forms(s, 0)
