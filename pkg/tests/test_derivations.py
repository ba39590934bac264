import itertools

import pytest

from sflab import terms as tm
from sflab.terms import App, Lam, ReductionKind, Var, normalize, parse
from sflab import types as ty
from sflab.types import Arrow, Forall, TVar, WrongClassError, classify, id_term, parse_type, translate_plus, ty_size
from sflab.derivations import (
    ContainsAllEError,
    Derivation,
    EtaSearchPreconditionError,
    UnindexedFreeVariableError,
    brute_force_positive,
    check_derivation,
    check_positive,
    check_simple,
    derivation_from_json,
    derivation_to_json,
    derive_id_minus,
    derive_id_plus,
    derive_id_trivial,
    eta_retype,
    eta_x_reducts,
    gamma_inf_check,
    skeleton_derivation,
    _ctx,
)

ETAFAIL = parse_type("((forall Y.X) -> X) -> (X -> X)")


def test_check_derivation_axiom():
    d = Derivation("id", _ctx({"x": TVar("X")}), Var("x"), TVar("X"))
    assert check_derivation(d) is None


def test_check_derivation_not_bindable():
    leaf = Derivation("id", _ctx({"y": TVar("X")}), Var("y"), TVar("X"))
    d = Derivation("alli", _ctx({"y": TVar("X")}), Var("y"), Forall("X", TVar("X")), (leaf,), var="X")
    diag = check_derivation(d)
    assert diag is not None and "bindable" in diag


def test_check_derivation_alle():
    leaf = Derivation("id", _ctx({"x": parse_type("forall X. X -> X")}), Var("x"), parse_type("forall X. X -> X"))
    d = Derivation(
        "alle",
        _ctx({"x": parse_type("forall X. X -> X")}),
        Var("x"),
        parse_type("Y -> Y"),
        (leaf,),
        inst=TVar("Y"),
    )
    assert check_derivation(d) is None


def test_check_derivation_alle_wrong_instance():
    leaf = Derivation("id", _ctx({"x": parse_type("forall X. X -> X")}), Var("x"), parse_type("forall X. X -> X"))
    d = Derivation(
        "alle",
        _ctx({"x": parse_type("forall X. X -> X")}),
        Var("x"),
        parse_type("Y -> Z"),
        (leaf,),
        inst=TVar("Y"),
    )
    assert check_derivation(d) is not None


def test_check_simple_application():
    ctx = {"x": parse_type("X -> X"), "y": TVar("X")}
    d = check_simple(ctx, parse("x y"), TVar("X"))
    assert d is not None and check_derivation(d) is None


def test_check_simple_rejects():
    assert check_simple({}, parse(r"\x.x"), parse_type("X -> Y")) is None


def test_check_simple_church_type():
    d = check_simple({}, parse(r"\f.\x.f x"), parse_type("(X -> X) -> (X -> X)"))
    assert d is not None and check_derivation(d) is None


def test_check_positive_identity_forall():
    d = check_positive({}, parse(r"\x.x"), parse_type("forall X. X -> X"))
    assert d is not None and check_derivation(d) is None


def test_check_positive_etafail_accepts_expansion():
    d = check_positive({}, parse(r"\x.\y.x y"), ETAFAIL)
    assert d is not None and check_derivation(d) is None


def test_check_positive_etafail_rejects_identity():
    assert check_positive({}, parse(r"\x.x"), ETAFAIL) is None


def test_check_positive_both_accept_hoisted():
    plus = translate_plus(ETAFAIL)
    assert check_positive({}, parse(r"\x.\y.x y"), plus) is not None
    assert check_positive({}, parse(r"\x.x"), plus) is not None


def test_check_positive_wrong_class():
    with pytest.raises(WrongClassError):
        check_positive({}, parse(r"\x.x"), parse_type("(forall Y. Y -> Y) -> X -> X"))


def test_check_positive_subject_beta_reduction():
    # validate a derivation containing a redex, reduce, and re-derive
    redex = parse(r"(\x.x) y")
    ctx = {"y": TVar("X")}
    fn = Derivation(
        "arri",
        _ctx(ctx),
        parse(r"\x.x"),
        parse_type("X -> X"),
        (Derivation("id", _ctx({"y": TVar("X"), "x": TVar("X")}), Var("x"), TVar("X")),),
    )
    arg = Derivation("id", _ctx(ctx), Var("y"), TVar("X"))
    d = Derivation("arre", _ctx(ctx), redex, TVar("X"), (fn, arg))
    assert check_derivation(d) is None
    reduct = normalize(redex, ReductionKind.BETA, 10).result
    assert check_positive(ctx, reduct, TVar("X")) is not None


def _closed_types(max_size, pool=("X", "Y")):
    def gen(s):
        if s == 1:
            return [TVar(v) for v in pool]
        out = []
        for a in range(1, s - 1):
            for d in gen(a):
                for c in gen(s - 1 - a):
                    out.append(Arrow(d, c))
        for v in pool:
            for b in gen(s - 1):
                out.append(Forall(v, b))
        return out

    seen = set()
    for s in range(1, max_size + 1):
        for t in gen(s):
            key = ty.canon(t)
            if key not in seen:
                seen.add(key)
                yield t


def test_check_positive_agrees_with_brute_force():
    types = [t for t in _closed_types(5) if classify(t).forall_plus2]
    terms = list(tm.enumerate_closed_beta_normal(5))
    checked = 0
    for sigma in types:
        for m in terms:
            fast = check_positive({}, m, sigma) is not None
            slow = brute_force_positive({}, m, sigma, depth=12)
            assert fast == slow, f"{tm.render(m)} : {ty.render_type(sigma)} fast={fast} slow={slow}"
            checked += 1
    assert checked > 1000


def test_gamma_inf_axiom():
    # find an index whose declared type is forall X0. X0 -> X0
    goal = parse_type("forall X0. X0 -> X0")
    j = next(i for i in itertools.count() if ty.canon(ty.nth_type(i)) == ty.canon(goal))
    i = (j + 0) * (j + 0 + 1) // 2 + 0  # pair(j, 0)
    assert ty.gamma_inf_decl(i) == goal
    assert gamma_inf_check(Var(f"x{i}"), goal)


def test_gamma_inf_closed_coincides():
    assert gamma_inf_check(parse(r"\x.x"), parse_type("forall X0. X0 -> X0"))
    assert gamma_inf_check(parse(r"\x.x"), parse_type("forall X0. X0 -> X0")) == (
        check_positive({}, parse(r"\x.x"), parse_type("forall X0. X0 -> X0")) is not None
    )


def test_gamma_inf_application():
    def pair(j, k):
        return (j + k) * (j + k + 1) // 2 + k

    arrow = parse_type("X0 -> X0")
    j_arrow = next(i for i in itertools.count() if ty.nth_type(i) == arrow)
    j_base = next(i for i in itertools.count() if ty.nth_type(i) == TVar("X0"))
    i1, i2 = pair(j_arrow, 0), pair(j_base, 0)
    term = App(Var(f"x{i1}"), Var(f"x{i2}"))
    assert gamma_inf_check(term, TVar("X0"))


def test_gamma_inf_unindexed_variable():
    with pytest.raises(UnindexedFreeVariableError):
        gamma_inf_check(parse("y"), TVar("X0"))


def test_derive_id_plus_base():
    d = derive_id_plus(TVar("X"))
    assert check_derivation(d) is None
    assert d.term == parse(r"\x.x")
    assert ty.ty_alpha_eq(d.ty, parse_type("X -> X"))


def test_derive_id_plus_etafail():
    d = derive_id_plus(ETAFAIL)
    assert check_derivation(d) is None
    assert ty.ty_alpha_eq(d.ty, Arrow(ETAFAIL, translate_plus(ETAFAIL)))
    assert d.term == id_term(ETAFAIL)


def test_derive_id_plus_all_small_types():
    count = 0
    for sigma in _closed_types(6):
        if not classify(sigma).forall_plus2:
            continue
        d = derive_id_plus(sigma)
        assert check_derivation(d) is None, ty.render_type(sigma)
        assert d.term == id_term(sigma)
        count += 1
    assert count > 100


def test_derive_id_minus_all_small_types():
    count = 0
    for sigma in _closed_types(6):
        if not classify(sigma).forall_minus2:
            continue
        d = derive_id_minus(sigma)
        assert check_derivation(d) is None, ty.render_type(sigma)
        assert d.term == id_term(sigma)
        count += 1
    assert count > 50


def test_derive_id_trivial_etafail():
    d = derive_id_trivial(ETAFAIL)
    assert check_derivation(d) is None
    assert ty.ty_alpha_eq(d.ty, Arrow(translate_plus(ETAFAIL), ETAFAIL))


def test_derive_id_trivial_simple():
    sigma = parse_type("(X -> X) -> X -> X")
    d = derive_id_trivial(sigma)
    assert check_derivation(d) is None
    assert ty.ty_alpha_eq(d.ty, Arrow(sigma, sigma))


def test_derive_id_trivial_all_small_types():
    count = 0
    for sigma in _closed_types(6):
        c = classify(sigma)
        if not c.forall_trivial or not (c.forall_plus2 or c.forall_minus2):
            continue
        d = derive_id_trivial(sigma)
        assert check_derivation(d) is None, ty.render_type(sigma)
        count += 1
    assert count > 50


def test_skeleton_derivation_identity():
    d = check_positive({}, parse(r"\x.x"), parse_type("forall X. X -> X"))
    sk = skeleton_derivation(d)
    assert check_derivation(sk) is None
    assert ty.ty_alpha_eq(sk.ty, parse_type("X -> X"))
    assert all(n.rule in ("id", "arri", "arre") for n in sk.nodes())


def test_skeleton_derivation_etafail():
    d = check_positive({}, parse(r"\x.\y.x y"), ETAFAIL)
    sk = skeleton_derivation(d)
    assert check_derivation(sk) is None
    assert ty.ty_alpha_eq(sk.ty, parse_type("(X -> X) -> (X -> X)"))


def test_skeleton_derivation_validates_for_all_positive_checks():
    for sigma in _closed_types(5):
        if not classify(sigma).forall_plus2:
            continue
        for m in tm.enumerate_closed_beta_normal(4):
            d = check_positive({}, m, sigma)
            if d is None:
                continue
            sk = skeleton_derivation(d)
            assert check_derivation(sk) is None
            for n in sk.nodes():
                assert classify(n.ty).simple


def test_skeleton_derivation_rejects_alle():
    leaf = Derivation("id", _ctx({"x": parse_type("forall X. X")}), Var("x"), parse_type("forall X. X"))
    d = Derivation("alle", _ctx({"x": parse_type("forall X. X")}), Var("x"), TVar("Y"), (leaf,), inst=TVar("Y"))
    with pytest.raises(ContainsAllEError):
        skeleton_derivation(d)


def test_eta_x_reducts_single_binder():
    assert eta_x_reducts(parse(r"\u.x u"), "x") == [Var("x")]


def test_eta_x_reducts_wrong_head():
    assert eta_x_reducts(parse(r"\u.y u"), "x") == []


def test_eta_x_reducts_two_binder_block():
    assert eta_x_reducts(parse(r"\u.\v.x p u v"), "x") == [parse("x p")]


def test_eta_retype_etafail():
    out = eta_retype(parse(r"\x.x"), ETAFAIL, bound=2)
    assert out is not None
    term, deriv = out
    assert term == parse(r"\x.\y.x y")
    assert check_derivation(deriv) is None
    assert tm.equiv(term, parse(r"\x.x"), ReductionKind.BETA_ETA) is True


def test_eta_retype_proper_returns_input():
    sigma = parse_type("forall X. (X -> X) -> (X -> X)")
    m = parse(r"\f.\x.f x")
    out = eta_retype(m, sigma, bound=2)
    assert out is not None and out[0] == m


def test_eta_retype_simple_type_identity():
    sigma = parse_type("(X -> X) -> (X -> X)")
    m = parse(r"\f.\x.f x")
    out = eta_retype(m, sigma, bound=1)
    assert out is not None and out[0] == m


def test_eta_retype_gate():
    with pytest.raises(EtaSearchPreconditionError):
        eta_retype(parse(r"\x.\y.y"), ETAFAIL, bound=2)


def test_subject_eta_failure_witness():
    # the expansion has the type, the eta-reduct loses it
    assert check_positive({}, parse(r"\x.\y.x y"), ETAFAIL) is not None
    assert check_positive({}, parse(r"\x.x"), ETAFAIL) is None


def test_derivation_json_roundtrip():
    d = check_positive({}, parse(r"\x.\y.x y"), ETAFAIL)
    obj = derivation_to_json(d)
    back = derivation_from_json(obj)
    assert check_derivation(back) is None
    assert ty.ty_alpha_eq(back.ty, d.ty)
    assert back.term == d.term
