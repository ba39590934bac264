"""System F typing derivations and decidable checking for the positive fragment.

Derivation trees carry explicit rule tags and full judgements, so checking
is local and never requires inference.  The positive-fragment checker
decides judgements whose context types have only negative quantifier
occurrences and whose goal has only positive ones; such derivations never
need the instantiation rule, which makes checking syntax-directed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from sflab import terms as tm
from sflab.terms import App, Lam, Term, Var
from sflab import types as ty
from sflab.types import Arrow, Forall, TVar, Ty, WrongClassError


class DerivationError(Exception):
    pass


class NotNormalError(DerivationError):
    pass


class ContainsAllEError(DerivationError):
    pass


class UnindexedFreeVariableError(DerivationError):
    pass


class EtaSearchPreconditionError(DerivationError):
    pass


Context = dict[str, Ty]


@dataclass(frozen=True)
class Judgement:
    ctx: tuple[tuple[str, Ty], ...]
    term: Term
    ty: Ty


@dataclass(frozen=True)
class Derivation:
    """One node: rule tag, full conclusion, children; var for the
    quantifier-introduction binder, inst for the elimination witness."""

    rule: str  # "id" | "arri" | "arre" | "alli" | "alle"
    ctx: tuple[tuple[str, Ty], ...]
    term: Term
    ty: Ty
    children: tuple["Derivation", ...] = ()
    var: str | None = None
    inst: Ty | None = None

    @property
    def judgement(self) -> Judgement:
        return Judgement(self.ctx, self.term, self.ty)

    def ctx_dict(self) -> Context:
        return dict(self.ctx)

    def nodes(self) -> Iterator["Derivation"]:
        yield self
        for c in self.children:
            yield from c.nodes()


def _ctx(items: Context) -> tuple[tuple[str, Ty], ...]:
    return tuple(items.items())


def _ctx_alpha_eq(a: tuple[tuple[str, Ty], ...], b: tuple[tuple[str, Ty], ...]) -> bool:
    da, db = dict(a), dict(b)
    return da.keys() == db.keys() and all(ty.ty_alpha_eq(da[k], db[k]) for k in da)


# ---------------------------------------------------------------------------
# Derivation checking

def check_derivation(d: Derivation) -> str | None:
    """Validate every node against its rule schema; None means OK."""
    return _check_node(d, "root")


def _check_node(d: Derivation, path: str) -> str | None:
    ctx = d.ctx_dict()
    if d.rule == "id":
        if not (isinstance(d.term, Var) and isinstance(d.term.ref, str)):
            return f"{path}: id rule on a non-variable"
        name = d.term.ref
        if name not in ctx:
            return f"{path}: variable {name} is not declared"
        if not ty.ty_alpha_eq(ctx[name], d.ty):
            return f"{path}: declared type of {name} differs from the conclusion"
        if d.children:
            return f"{path}: id rule takes no premises"
        return None
    if d.rule == "arri":
        if not isinstance(d.ty, Arrow):
            return f"{path}: abstraction rule must conclude an arrow"
        if not isinstance(d.term, Lam):
            return f"{path}: abstraction rule on a non-abstraction"
        if len(d.children) != 1:
            return f"{path}: abstraction rule takes one premise"
        c = d.children[0]
        cctx = c.ctx_dict()
        extra = set(cctx) - set(ctx)
        if len(extra) != 1:
            return f"{path}: premise context must add exactly one declaration"
        x = extra.pop()
        if x in ctx:
            return f"{path}: binder shadows a declared variable"
        if not all(k in cctx and ty.ty_alpha_eq(cctx[k], v) for k, v in ctx.items()):
            return f"{path}: premise context must extend the conclusion context"
        if not ty.ty_alpha_eq(cctx[x], d.ty.dom):
            return f"{path}: binder type differs from the arrow domain"
        if not ty.ty_alpha_eq(c.ty, d.ty.cod):
            return f"{path}: premise type differs from the arrow codomain"
        if c.term != tm.open_with(d.term, Var(x)):
            return f"{path}: premise term is not the opened abstraction body"
        return _check_node(c, path + ".0")
    if d.rule == "arre":
        if not isinstance(d.term, App):
            return f"{path}: application rule on a non-application"
        if len(d.children) != 2:
            return f"{path}: application rule takes two premises"
        cf, ca = d.children
        for i, c in enumerate((cf, ca)):
            if not _ctx_alpha_eq(c.ctx, d.ctx):
                return f"{path}: premise {i} context differs from the conclusion"
        if cf.term != d.term.fn or ca.term != d.term.arg:
            return f"{path}: premise terms do not split the application"
        if not isinstance(cf.ty, Arrow):
            return f"{path}: function premise must have an arrow type"
        if not ty.ty_alpha_eq(cf.ty.dom, ca.ty):
            return f"{path}: argument type differs from the arrow domain"
        if not ty.ty_alpha_eq(cf.ty.cod, d.ty):
            return f"{path}: conclusion differs from the arrow codomain"
        err = _check_node(cf, path + ".0")
        return err if err else _check_node(ca, path + ".1")
    if d.rule == "alli":
        if len(d.children) != 1 or d.var is None:
            return f"{path}: quantifier introduction takes one premise and a variable"
        c = d.children[0]
        if not _ctx_alpha_eq(c.ctx, d.ctx):
            return f"{path}: premise context differs from the conclusion"
        if c.term != d.term:
            return f"{path}: premise term differs from the conclusion"
        for _, t in d.ctx:
            if d.var in ty.free_type_vars(t):
                return f"{path}: {d.var} is not bindable in the context"
        if not ty.ty_alpha_eq(d.ty, Forall(d.var, c.ty)):
            return f"{path}: conclusion is not the quantified premise"
        return _check_node(c, path + ".0")
    if d.rule == "alle":
        if len(d.children) != 1 or d.inst is None:
            return f"{path}: quantifier elimination takes one premise and a witness"
        c = d.children[0]
        if not _ctx_alpha_eq(c.ctx, d.ctx):
            return f"{path}: premise context differs from the conclusion"
        if c.term != d.term:
            return f"{path}: premise term differs from the conclusion"
        if not isinstance(c.ty, Forall):
            return f"{path}: premise must have a quantified type"
        if not ty.ty_alpha_eq(d.ty, ty.subst_ty(c.ty.body, c.ty.var, d.inst)):
            return f"{path}: conclusion is not the instantiated premise body"
        return _check_node(c, path + ".0")
    return f"{path}: unknown rule {d.rule!r}"


# ---------------------------------------------------------------------------
# Syntax-directed checking

def _fresh_term_name(base: str, used: set[str]) -> str:
    if base and base not in used:
        return base
    base = base or "x"
    n = 1
    while f"{base}{n}" in used:
        n += 1
    return f"{base}{n}"


def check_simple(ctx: Context, term: Term, goal: Ty) -> Derivation | None:
    """Decide a simply-typed judgement for a beta-normal term."""
    if not ty.classify(goal).simple or any(not ty.classify(t).simple for t in ctx.values()):
        raise WrongClassError("check_simple requires quantifier-free types")
    if not tm.is_beta_normal(term):
        raise NotNormalError("check_simple requires a beta-normal term")
    return _syntax_directed(ctx, term, goal, supply=None)


def check_positive(ctx: Context, term: Term, goal: Ty, strict_ctx: bool = True) -> Derivation | None:
    """Decide a judgement in the instantiation-free fragment.

    Context types must have only negative quantifier occurrences and the
    goal only positive ones; under those constraints derivability is
    syntax-directed: strip goal quantifiers eagerly, match abstractions
    against arrows, and run neutral spines from the head declaration.
    """
    if not ty.classify(goal).forall_plus2:
        raise WrongClassError(f"goal {ty.render_type(goal)} has a negative quantifier")
    if strict_ctx:
        for name, t in ctx.items():
            if not ty.classify(t).forall_minus2:
                raise WrongClassError(f"declared type of {name} has a positive quantifier")
    if not tm.is_beta_normal(term):
        raise NotNormalError("check_positive requires a beta-normal term")
    names: set[str] = set()
    for t in ctx.values():
        names |= ty.all_type_names(t)
    names |= ty.all_type_names(goal)
    return _syntax_directed(dict(ctx), term, goal, supply=ty.NameSupply(names))


def _syntax_directed(ctx: Context, term: Term, goal: Ty, supply: ty.NameSupply | None) -> Derivation | None:
    if isinstance(goal, Forall):
        if supply is None:
            return None
        z = supply.fresh(goal.var)
        child = _syntax_directed(ctx, term, ty.subst_ty(goal.body, goal.var, TVar(z)), supply)
        if child is None:
            return None
        return Derivation("alli", _ctx(ctx), term, goal, (child,), var=z)
    if isinstance(term, Lam):
        if not isinstance(goal, Arrow):
            return None
        x = _fresh_term_name(term.hint, set(ctx) | set(tm.free_names(term)))
        child = _syntax_directed({**ctx, x: goal.dom}, tm.open_with(term, Var(x)), goal.cod, supply)
        if child is None:
            return None
        return Derivation("arri", _ctx(ctx), term, goal, (child,))
    # neutral spine
    head = term
    args: list[Term] = []
    while isinstance(head, App):
        args.append(head.arg)
        head = head.fn
    args.reverse()
    if not (isinstance(head, Var) and isinstance(head.ref, str)):
        return None
    if head.ref not in ctx:
        return None
    cur = ctx[head.ref]
    deriv = Derivation("id", _ctx(ctx), head, cur)
    for arg in args:
        if not isinstance(cur, Arrow):
            return None
        arg_d = _syntax_directed(ctx, arg, cur.dom, supply)
        if arg_d is None:
            return None
        deriv = Derivation("arre", _ctx(ctx), App(deriv.term, arg), cur.cod, (deriv, arg_d))
        cur = cur.cod
    return deriv if ty.ty_alpha_eq(cur, goal) else None


# ---------------------------------------------------------------------------
# Contextual typability against the fixed declaration sequence

import re as _re

_INDEXED = _re.compile(r"x([0-9]+)")


def gamma_inf_context(term: Term) -> Context:
    ctx: Context = {}
    for name in sorted(tm.free_names(term)):
        m = _INDEXED.fullmatch(name)
        if not m:
            raise UnindexedFreeVariableError(
                f"free variable {name!r} must be written x<i> to pick up declaration i"
            )
        ctx[name] = ty.gamma_inf_decl(int(m.group(1)))
    return ctx


def gamma_inf_check(term: Term, goal: Ty) -> bool:
    """Typability under the enumerated declarations x0:tau_0, x1:tau_1, ..."""
    ctx = gamma_inf_context(term)
    return check_positive(ctx, term, goal, strict_ctx=False) is not None


# ---------------------------------------------------------------------------
# Identity-coercion derivations

def derive_id_plus(sigma: Ty) -> Derivation:
    """Derivation of |- I : sigma -> sigma+ for a positive type."""
    if not ty.classify(sigma).forall_plus2:
        raise WrongClassError(f"{ty.render_type(sigma)} is not a positive type")
    s = ty.rename_apart(sigma)
    return _id_coercion(s, ty.translate_plus(s))


def derive_id_minus(sigma: Ty) -> Derivation:
    """Derivation of |- I : sigma- -> sigma for a negative type."""
    if not ty.classify(sigma).forall_minus2:
        raise WrongClassError(f"{ty.render_type(sigma)} is not a negative type")
    s = ty.rename_apart(sigma)
    return _id_coercion(ty.translate_minus(s), s)


def derive_id_trivial(sigma: Ty) -> Derivation:
    """For a type whose quantifiers bind nothing: the reverse coercion.

    Positive: |- I : sigma+ -> sigma.  Negative: |- I : sigma -> sigma-.
    """
    c = ty.classify(sigma)
    if not c.forall_trivial:
        raise WrongClassError(f"{ty.render_type(sigma)} has a binding quantifier")
    s = ty.rename_apart(sigma)
    if c.forall_plus2:
        return _id_coercion(ty.translate_plus(s), s)
    if c.forall_minus2:
        return _id_coercion(s, ty.translate_minus(s))
    raise WrongClassError(f"{ty.render_type(sigma)} is in neither polarity family")


def _id_coercion(src: Ty, tgt: Ty) -> Derivation:
    supply = ty.NameSupply(ty.all_type_names(src) | ty.all_type_names(tgt))
    ctx = {"x": src}
    x_d = Derivation("id", _ctx(ctx), Var("x"), src)
    body = _coerce(ctx, Var("x"), x_d, src, tgt, supply, used={"x"})
    return Derivation("arri", (), tm.lam("x", body.term), Arrow(src, tgt), (body,))


def _coerce(
    ctx: Context, h: Term, h_d: Derivation, src: Ty, tgt: Ty, supply: ty.NameSupply, used: set[str]
) -> Derivation:
    """Derive ctx |- E : tgt where E is the eta-long identity applied to h.

    src and tgt share a skeleton; quantifiers are introduced on the goal
    side and eliminated on the source side, with the witness read off by
    walking the two skeletons in parallel.  Binder names are never reused,
    so weakening a sibling derivation can never clash.
    """
    if isinstance(tgt, Forall):
        z = supply.fresh(tgt.var)
        child = _coerce(ctx, h, h_d, src, ty.subst_ty(tgt.body, tgt.var, TVar(z)), supply, used)
        return Derivation("alli", _ctx(ctx), child.term, tgt, (child,), var=z)
    if isinstance(src, Forall):
        inst = _match_stripped(src.var, src.body, tgt)
        stripped = ty.subst_ty(src.body, src.var, inst)
        h_d = Derivation("alle", _ctx(ctx), h, stripped, (h_d,), inst=inst)
        return _coerce(ctx, h, h_d, stripped, tgt, supply, used)
    if isinstance(src, TVar) and isinstance(tgt, TVar):
        if src != tgt:
            raise DerivationError(f"misaligned coercion atoms {src.name} vs {tgt.name}")
        return h_d
    if isinstance(src, Arrow) and isinstance(tgt, Arrow):
        y = _fresh_term_name("y", used)
        used.add(y)
        ctx2 = {**ctx, y: tgt.dom}
        y_d = Derivation("id", _ctx(ctx2), Var(y), tgt.dom)
        arg = _coerce(ctx2, Var(y), y_d, tgt.dom, src.dom, supply, used)
        h_d2 = _weaken(h_d, y, tgt.dom)
        app = App(h, arg.term)
        app_d = Derivation("arre", _ctx(ctx2), app, src.cod, (h_d2, arg))
        body = _coerce(ctx2, app, app_d, src.cod, tgt.cod, supply, used)
        return Derivation("arri", _ctx(ctx), tm.lam(y, body.term), tgt, (body,))
    raise DerivationError(f"misaligned coercion pair {ty.render_type(src)} / {ty.render_type(tgt)}")


def _match_stripped(var: str, body: Ty, goal: Ty) -> Ty:
    """Instantiation witness for a stripped source quantifier.

    The skeletons of body and goal have the same shape; the variable's
    occurrences line up with a single goal-side atom.
    """
    found: list[Ty] = []

    def walk(a: Ty, b: Ty) -> None:
        match a, b:
            case TVar(n), _:
                if n == var:
                    found.append(b)
            case Arrow(d1, c1), Arrow(d2, c2):
                walk(d1, d2)
                walk(c1, c2)
            case _:
                raise DerivationError("skeleton shapes diverge during matching")

    walk(ty.skeleton(body), ty.skeleton(goal))
    if not found:
        return TVar(var)
    first = found[0]
    if any(f != first for f in found[1:]):
        raise DerivationError(f"inconsistent instantiation for {var}")
    return first


def _weaken(d: Derivation, name: str, t: Ty) -> Derivation:
    if any(name == k for k, _ in d.ctx):
        raise DerivationError(f"cannot weaken: {name} already declared")
    if d.rule == "alli" and d.var in ty.free_type_vars(t):
        raise DerivationError(f"cannot weaken: {d.var} occurs in the added type")
    return Derivation(
        d.rule,
        d.ctx + ((name, t),),
        d.term,
        d.ty,
        tuple(_weaken(c, name, t) for c in d.children),
        var=d.var,
        inst=d.inst,
    )


# ---------------------------------------------------------------------------
# Derivation skeletonization

def skeleton_derivation(d: Derivation) -> Derivation:
    """Erase quantifier introductions and skeletonize every judgement type."""
    for n in d.nodes():
        if n.rule == "alle":
            raise ContainsAllEError("cannot skeletonize a derivation using instantiation")

    def go(n: Derivation) -> Derivation:
        if n.rule == "alli":
            return go(n.children[0])
        return Derivation(
            n.rule,
            tuple((k, ty.skeleton(t)) for k, t in n.ctx),
            n.term,
            ty.skeleton(n.ty),
            tuple(go(c) for c in n.children),
        )

    return go(d)


# ---------------------------------------------------------------------------
# Eta moves restricted to a head variable

def eta_x_reducts(term: Term, x: str) -> list[Term]:
    """One-step contractions of redexes \\u1...un. x P1..Pk u1..un.

    Only maximal binder blocks are scanned, and the head must be the free
    variable x; the block contracts in a single step to x P1..Pk.
    """
    if not tm.is_beta_normal(term):
        raise NotNormalError("eta reduction at a head variable expects a beta-normal term")

    def contract_block(t: Term) -> Term | None:
        n = 0
        body = t
        while isinstance(body, Lam):
            n += 1
            body = body.body
        if n == 0:
            return None
        args: list[Term] = []
        head = body
        while isinstance(head, App):
            args.append(head.arg)
            head = head.fn
        args.reverse()
        if head != Var(x) or len(args) < n:
            return None
        tail = args[len(args) - n:]
        if any(a != Var(n - 1 - i) for i, a in enumerate(tail)):
            return None
        prefix = args[: len(args) - n]
        if any(_uses_block(p, n) for p in prefix):
            return None
        out: Term = Var(x)
        for p in prefix:
            out = App(out, _drop_binders(p, n))
        return out

    results: dict[Term, None] = {}

    def go(t: Term, parent_is_lam: bool) -> list[Term]:
        outs: list[Term] = []
        if isinstance(t, Lam) and not parent_is_lam:
            c = contract_block(t)
            if c is not None:
                outs.append(c)
        match t:
            case Lam(hint, body):
                outs.extend(Lam(hint, b) for b in go(body, True))
            case App(fn, arg):
                outs.extend(App(f, arg) for f in go(fn, False))
                outs.extend(App(fn, a) for a in go(arg, False))
        return outs

    for r in go(term, False):
        results.setdefault(r, None)
    return list(results)


def _uses_block(t: Term, n: int, depth: int = 0) -> bool:
    match t:
        case Var(ref):
            return isinstance(ref, int) and depth <= ref < depth + n
        case Lam(_, body):
            return _uses_block(body, n, depth + 1)
        case App(fn, arg):
            return _uses_block(fn, n, depth) or _uses_block(arg, n, depth)
    raise TypeError(t)


def _drop_binders(t: Term, n: int, depth: int = 0) -> Term:
    match t:
        case Var(ref):
            if isinstance(ref, int) and ref >= depth + n:
                return Var(ref - n)
            return t
        case Lam(hint, body):
            return Lam(hint, _drop_binders(body, n, depth + 1))
        case App(fn, arg):
            return App(_drop_binders(fn, n, depth), _drop_binders(arg, n, depth))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Bounded eta-retyping search

def _shift_up(t: Term, depth: int = 0) -> Term:
    match t:
        case Var(ref):
            if isinstance(ref, int) and ref >= depth:
                return Var(ref + 1)
            return t
        case Lam(hint, body):
            return Lam(hint, _shift_up(body, depth + 1))
        case App(fn, arg):
            return App(_shift_up(fn, depth), _shift_up(arg, depth))
    raise TypeError(t)


def eta_expansions(t: Term) -> list[Term]:
    """One-step eta-expansions that keep the term beta-normal."""

    def go(t: Term, fn_pos: bool) -> list[Term]:
        outs: list[Term] = []
        if not fn_pos and not isinstance(t, Lam):
            outs.append(Lam("u", App(_shift_up(t), Var(0))))
        match t:
            case Lam(hint, body):
                outs.extend(Lam(hint, b) for b in go(body, False))
            case App(fn, arg):
                outs.extend(App(f, arg) for f in go(fn, True))
                outs.extend(App(fn, a) for a in go(arg, False))
        return outs

    return go(t, False)


def _max_arity(t: Ty) -> int:
    args, _ = ty.spine(t)
    best = len(args)
    match t:
        case Arrow(d, c):
            best = max(best, _max_arity(d), _max_arity(c))
        case Forall(_, b):
            best = max(best, _max_arity(b))
    return best


def eta_retype(term: Term, sigma: Ty, bound: int) -> tuple[Term, Derivation] | None:
    """Search the eta-neighborhood of a term for one typable at sigma.

    Requires that the term itself checks at the hoisted (prenex) type;
    None means not-found-within-bound, which is inconclusive.
    """
    c = ty.classify(sigma)
    if not c.forall_plus2:
        raise WrongClassError(f"{ty.render_type(sigma)} is not a positive type")
    plus = ty.translate_plus(sigma)
    if check_positive({}, term, plus) is None:
        raise EtaSearchPreconditionError(
            f"{tm.render(term)} does not check at the hoisted type {ty.render_type(plus)}"
        )
    size_cap = tm.size(term) + 2 * max(1, bound) * max(1, _max_arity(sigma))
    seen = {term}
    frontier = [term]
    for _ in range(bound + 1):
        for cand in frontier:
            d = check_positive({}, cand, sigma)
            if d is not None:
                return cand, d
        nxt: list[Term] = []
        for cand in frontier:
            for move in tm.reducts(cand, tm.ReductionKind.ETA) + eta_expansions(cand):
                if move not in seen and tm.size(move) <= size_cap:
                    seen.add(move)
                    nxt.append(move)
        frontier = nxt
        if not frontier:
            break
    return None


# ---------------------------------------------------------------------------
# Brute-force oracle for the positive fragment (test support)

def brute_force_positive(ctx: Context, term: Term, goal: Ty, depth: int) -> bool:
    """Enumerate instantiation-free derivations up to a depth bound."""
    if depth <= 0:
        return False
    if isinstance(term, Var) and isinstance(term.ref, str):
        declared = ctx.get(term.ref)
        if declared is not None and ty.ty_alpha_eq(declared, goal):
            return True
    if isinstance(goal, Forall):
        used: set[str] = set()
        for t in ctx.values():
            used |= ty.free_type_vars(t)
        z = ty.fresh_name("B", used | ty.all_type_names(goal))
        if brute_force_positive(ctx, term, ty.subst_ty(goal.body, goal.var, TVar(z)), depth - 1):
            return True
    if isinstance(term, Lam) and isinstance(goal, Arrow):
        x = _fresh_term_name(term.hint, set(ctx) | set(tm.free_names(term)))
        if brute_force_positive({**ctx, x: goal.dom}, tm.open_with(term, Var(x)), goal.cod, depth - 1):
            return True
    if isinstance(term, App):
        for cand in _subformula_closure(list(ctx.values()) + [goal]):
            if brute_force_positive(ctx, term.fn, Arrow(cand, goal), depth - 1) and brute_force_positive(
                ctx, term.arg, cand, depth - 1
            ):
                return True
    return False


def _subformula_closure(tys: list[Ty]) -> list[Ty]:
    seen: dict[tuple, Ty] = {}

    def add(t: Ty) -> None:
        key = ty.canon(t)
        if key in seen:
            return
        seen[key] = t
        match t:
            case Arrow(d, c):
                add(d)
                add(c)
            case Forall(_, b):
                add(b)

    for t in tys:
        add(t)
    return list(seen.values())


# ---------------------------------------------------------------------------
# JSON wire format

def derivation_to_json(d: Derivation) -> dict:
    obj: dict = {
        "rule": d.rule,
        "ctx": {k: ty.render_type(t) for k, t in d.ctx},
        "term": tm.render(d.term),
        "type": ty.render_type(d.ty),
        "children": [derivation_to_json(c) for c in d.children],
    }
    if d.var is not None:
        obj["var"] = d.var
    if d.inst is not None:
        obj["inst"] = ty.render_type(d.inst)
    return obj


def derivation_from_json(obj: dict) -> Derivation:
    return Derivation(
        obj["rule"],
        tuple((k, ty.parse_type(v)) for k, v in obj["ctx"].items()),
        tm.parse(obj["term"]),
        ty.parse_type(obj["type"]),
        tuple(derivation_from_json(c) for c in obj.get("children", [])),
        var=obj.get("var"),
        inst=ty.parse_type(obj["inst"]) if "inst" in obj else None,
    )
