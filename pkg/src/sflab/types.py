"""System F types: syntax, polarity classification, prenex translations.

The positive/negative families are positional: a type is in the positive
family when every universal quantifier inside it sits at a positive
position (even number of arrow-domain steps from the root), and in the
negative family when every quantifier sits at a negative position.
Quantifier-free types belong to both.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from sflab.terms import DEFAULT_NORMALIZE_FUEL, ReductionKind, Term, arrow_term, identity, normalize


class TypeError_(Exception):
    pass


class TypeParseError(TypeError_):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class WrongClassError(TypeError_):
    """The type is not in the family an operation requires."""


class Ty:
    __slots__ = ()

    def __str__(self) -> str:
        return render_type(self)


@dataclass(frozen=True)
class TVar(Ty):
    name: str


@dataclass(frozen=True)
class Arrow(Ty):
    dom: Ty
    cod: Ty


@dataclass(frozen=True)
class Forall(Ty):
    var: str
    body: Ty


# ---------------------------------------------------------------------------
# Structure

def ty_size(t: Ty) -> int:
    match t:
        case TVar():
            return 1
        case Arrow(d, c):
            return 1 + ty_size(d) + ty_size(c)
        case Forall(_, b):
            return 1 + ty_size(b)
    raise TypeError(t)


def free_type_vars(t: Ty) -> frozenset[str]:
    match t:
        case TVar(n):
            return frozenset([n])
        case Arrow(d, c):
            return free_type_vars(d) | free_type_vars(c)
        case Forall(v, b):
            return free_type_vars(b) - {v}
    raise TypeError(t)


def all_type_names(t: Ty) -> frozenset[str]:
    match t:
        case TVar(n):
            return frozenset([n])
        case Arrow(d, c):
            return all_type_names(d) | all_type_names(c)
        case Forall(v, b):
            return all_type_names(b) | {v}
    raise TypeError(t)


def _canon(t: Ty, env: tuple[str, ...]) -> tuple:
    match t:
        case TVar(n):
            for i, v in enumerate(env):
                if v == n:
                    return ("b", i)
            return ("f", n)
        case Arrow(d, c):
            return ("a", _canon(d, env), _canon(c, env))
        case Forall(v, b):
            return ("q", _canon(b, (v,) + env))
    raise TypeError(t)


def canon(t: Ty) -> tuple:
    """Hashable alpha-invariant key."""
    return _canon(t, ())


def ty_alpha_eq(a: Ty, b: Ty) -> bool:
    return canon(a) == canon(b)


def subst_ty(t: Ty, name: str, rep: Ty) -> Ty:
    """Capture-avoiding substitution of `rep` for free `name`."""
    match t:
        case TVar(n):
            return rep if n == name else t
        case Arrow(d, c):
            return Arrow(subst_ty(d, name, rep), subst_ty(c, name, rep))
        case Forall(v, b):
            if v == name:
                return t
            if v in free_type_vars(rep) and name in free_type_vars(b):
                v2 = fresh_name(v, all_type_names(b) | free_type_vars(rep) | {name})
                b = subst_ty(b, v, TVar(v2))
                return Forall(v2, subst_ty(b, name, rep))
            return Forall(v, subst_ty(b, name, rep))
    raise TypeError(t)


def rename_bound(t: Ty, forbidden: frozenset[str]) -> Ty:
    """Alpha-rename binders so none of them uses a forbidden name."""
    match t:
        case TVar():
            return t
        case Arrow(d, c):
            return Arrow(rename_bound(d, forbidden), rename_bound(c, forbidden))
        case Forall(v, b):
            if v in forbidden:
                v2 = fresh_name(v, forbidden | all_type_names(b))
                b = subst_ty(b, v, TVar(v2))
                v = v2
            return Forall(v, rename_bound(b, forbidden))
    raise TypeError(t)


def rename_apart(t: Ty) -> Ty:
    """Alpha-rename so binders are pairwise distinct and disjoint from free vars."""
    supply = NameSupply(free_type_vars(t))

    def go(t: Ty) -> Ty:
        match t:
            case TVar():
                return t
            case Arrow(d, c):
                return Arrow(go(d), go(c))
            case Forall(v, b):
                v2 = supply.fresh(v)
                if v2 != v:
                    b = subst_ty(b, v, TVar(v2))
                return Forall(v2, go(b))
        raise TypeError(t)

    return go(t)


_IDENT = re.compile(r"[A-Z][a-zA-Z0-9_]*")


def fresh_name(base: str, forbidden: set[str] | frozenset[str]) -> str:
    if base not in forbidden:
        return base
    n = 1
    while f"{base}{n}" in forbidden:
        n += 1
    return f"{base}{n}"


class NameSupply:
    """Deterministic fresh-name source; never hands out the same name twice."""

    def __init__(self, forbidden: set[str] | frozenset[str] = frozenset()):
        self._used = set(forbidden)

    def fresh(self, base: str) -> str:
        name = fresh_name(base, self._used)
        self._used.add(name)
        return name


# ---------------------------------------------------------------------------
# Parsing and printing

_TY_TOKEN = re.compile(r"\s*(->|forall\b|\.|\(|\)|[A-Z][a-zA-Z0-9_]*)")


def parse_type(text: str) -> Ty:
    """Grammar: ty ::= 'forall' X '.' ty | arr ; arr ::= atom ('->' arr)?"""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TY_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise TypeParseError(f"unexpected character {text[pos:].strip()[0]!r}", pos)
            break
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    idx = 0

    def peek() -> str | None:
        return tokens[idx][0] if idx < len(tokens) else None

    def cur_pos() -> int:
        return tokens[idx][1] if idx < len(tokens) else len(text)

    def parse_ty() -> Ty:
        nonlocal idx
        if peek() == "forall":
            idx += 1
            name = peek()
            if name is None or not _IDENT.fullmatch(name):
                raise TypeParseError("expected a type variable after 'forall'", cur_pos())
            idx += 1
            if peek() != ".":
                raise TypeParseError("expected '.' after quantified variable", cur_pos())
            idx += 1
            return Forall(name, parse_ty())
        return parse_arr()

    def parse_arr() -> Ty:
        nonlocal idx
        left = parse_atom()
        if peek() == "->":
            idx += 1
            return Arrow(left, parse_arr())
        return left

    def parse_atom() -> Ty:
        nonlocal idx
        tok = peek()
        if tok == "(":
            idx += 1
            t = parse_ty()
            if peek() != ")":
                raise TypeParseError("expected ')'", cur_pos())
            idx += 1
            return t
        if tok is None or tok in ("->", ".", ")", "forall"):
            raise TypeParseError("expected a type", cur_pos())
        idx += 1
        return TVar(tok)

    result = parse_ty()
    if idx != len(tokens):
        raise TypeParseError(f"trailing input {tokens[idx][0]!r}", tokens[idx][1])
    return result


def render_type(t: Ty) -> str:
    def go(t: Ty, ctx: str) -> str:
        match t:
            case TVar(n):
                return n
            case Arrow(d, c):
                s = f"{go(d, 'dom')} -> {go(c, 'cod')}"
                return f"({s})" if ctx == "dom" else s
            case Forall(v, b):
                s = f"forall {v}. {go(b, 'body')}"
                return f"({s})" if ctx == "dom" else s
        raise TypeError(t)

    return go(t, "top")


# ---------------------------------------------------------------------------
# Classification

@dataclass(frozen=True)
class TypeClassification:
    simple: bool
    pi: bool
    sigma0: bool
    sigma: bool
    forall_plus2: bool
    forall_minus2: bool
    proper: bool
    forall_plus: bool
    forall_minus: bool
    forall_trivial: bool


def strip_foralls(t: Ty) -> tuple[list[str], Ty]:
    vars_: list[str] = []
    while isinstance(t, Forall):
        vars_.append(t.var)
        t = t.body
    return vars_, t


def spine(t: Ty) -> tuple[list[Ty], Ty]:
    """Arrow spine: returns ([dom1..domn], tail) with tail not an arrow."""
    args: list[Ty] = []
    while isinstance(t, Arrow):
        args.append(t.dom)
        t = t.cod
    return args, t


def classify(t: Ty) -> TypeClassification:
    has_forall = False
    all_pos = True
    all_neg = True
    proper = True
    trivial = True

    def walk(t: Ty, sign: int) -> None:
        nonlocal has_forall, all_pos, all_neg, proper, trivial
        match t:
            case TVar():
                return
            case Arrow(d, c):
                walk(d, -sign)
                walk(c, sign)
            case Forall(v, b):
                has_forall = True
                if sign > 0:
                    all_neg = False
                else:
                    all_pos = False
                if v in free_type_vars(b):
                    trivial = False
                else:
                    proper = False
                walk(b, sign)

    walk(t, +1)
    simple = not has_forall
    _, core = strip_foralls(t)
    pi = _is_simple(core)
    args, tail = spine(t)
    sigma0 = isinstance(tail, TVar) and all(_is_pi(a) for a in args)
    s_args, s_tail = spine(core)
    sigma = isinstance(s_tail, TVar) and all(_is_pi(a) for a in s_args)
    plus2 = all_pos
    minus2 = all_neg
    return TypeClassification(
        simple=simple,
        pi=pi,
        sigma0=sigma0,
        sigma=sigma,
        forall_plus2=plus2,
        forall_minus2=minus2,
        proper=proper,
        forall_plus=plus2 and proper,
        forall_minus=minus2 and proper,
        forall_trivial=trivial,
    )


def _is_simple(t: Ty) -> bool:
    match t:
        case TVar():
            return True
        case Arrow(d, c):
            return _is_simple(d) and _is_simple(c)
        case Forall():
            return False
    raise TypeError(t)


def _is_pi(t: Ty) -> bool:
    _, core = strip_foralls(t)
    return _is_simple(core)


def skeleton(t: Ty) -> Ty:
    """Delete every quantifier: sk(s->t) = sk(s)->sk(t), sk(forall X.s) = sk(s)."""
    match t:
        case TVar():
            return t
        case Arrow(d, c):
            return Arrow(skeleton(d), skeleton(c))
        case Forall(_, b):
            return skeleton(b)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Prenex translations

def translate_plus(t: Ty) -> Ty:
    """Hoist every quantifier of a positive type to the front.

    The result is prenex with a quantifier-free body equal to the skeleton,
    and every hoisted variable is renamed so it occurs nowhere else.
    """
    if not classify(t).forall_plus2:
        raise WrongClassError(f"{render_type(t)} has a negative quantifier occurrence")
    supply = NameSupply(free_type_vars(t))
    return _plus(t, supply)


def translate_minus(t: Ty) -> Ty:
    """Push a negative type to the shape forall-prefixed-arguments -> atom."""
    if not classify(t).forall_minus2:
        raise WrongClassError(f"{render_type(t)} has a positive quantifier occurrence")
    supply = NameSupply(free_type_vars(t))
    return _minus(t, supply)


def _plus(t: Ty, supply: NameSupply) -> Ty:
    match t:
        case TVar():
            return t
        case Forall(v, b):
            v2 = supply.fresh(v)
            return Forall(v2, _plus(subst_ty(b, v, TVar(v2)), supply))
        case Arrow(dom, cod):
            neg = _minus(dom, supply)
            args, tail = spine(neg)
            bundles: list[str] = []
            cores: list[Ty] = []
            for a in args:
                vs, core = strip_foralls(a)
                bundles.extend(vs)
                cores.append(core)
            pos = _plus(cod, supply)
            cod_bundle, cod_core = strip_foralls(pos)
            new_dom = tail
            for c in reversed(cores):
                new_dom = Arrow(c, new_dom)
            body: Ty = Arrow(new_dom, cod_core)
            for v in reversed(cod_bundle + bundles):
                body = Forall(v, body)
            return body
    raise TypeError(t)


def _minus(t: Ty, supply: NameSupply) -> Ty:
    match t:
        case TVar():
            return t
        case Arrow(dom, cod):
            return Arrow(_plus(dom, supply), _minus(cod, supply))
    raise WrongClassError(f"{render_type(t)} is not in the negative family")


# ---------------------------------------------------------------------------
# Identity coercion terms

def id_term(t: Ty, fuel: int = DEFAULT_NORMALIZE_FUEL) -> Term:
    """The eta-long identity at the skeleton of t (beta-normal)."""
    match t:
        case TVar():
            return identity()
        case Forall(_, b):
            return id_term(b, fuel)
        case Arrow(d, c):
            raw = arrow_term(id_term(d, fuel), id_term(c, fuel))
            out = normalize(raw, ReductionKind.BETA, fuel)
            assert out.result is not None
            return out.result
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Type enumeration (for the infinite declaration sequence)

TYPE_POOL = tuple(f"X{i}" for i in range(10))


@lru_cache(maxsize=None)
def _types_of_size(s: int) -> tuple[Ty, ...]:
    if s < 1:
        return ()
    if s == 1:
        return tuple(TVar(v) for v in TYPE_POOL)
    out: list[Ty] = []
    for a in range(1, s - 1):
        for d in _types_of_size(a):
            for c in _types_of_size(s - 1 - a):
                out.append(Arrow(d, c))
    for v in TYPE_POOL:
        for b in _types_of_size(s - 1):
            out.append(Forall(v, b))
    return tuple(out)


def enumerate_types() -> Iterator[Ty]:
    s = 1
    while True:
        yield from _types_of_size(s)
        s += 1


_TYPE_CACHE: list[Ty] = []


def nth_type(n: int) -> Ty:
    s = 1
    while len(_TYPE_CACHE) <= n:
        _TYPE_CACHE.extend(_types_of_size(s))
        s += 1
        if s > 64:
            raise ValueError("type index out of practical range")
    return _TYPE_CACHE[n]


def cantor_unpair(i: int) -> tuple[int, int]:
    """Inverse of pair(j, k) = (j + k)(j + k + 1)/2 + k."""
    w = int(((8 * i + 1) ** 0.5 - 1) // 2)
    while (w + 1) * (w + 2) // 2 <= i:
        w += 1
    while w * (w + 1) // 2 > i:
        w -= 1
    t = w * (w + 1) // 2
    k = i - t
    j = w - k
    return j, k


def gamma_inf_decl(i: int) -> Ty:
    """The i-th declared type; every type recurs at infinitely many indices."""
    if i < 0:
        raise ValueError("index must be non-negative")
    j, _ = cantor_unpair(i)
    return nth_type(j)
