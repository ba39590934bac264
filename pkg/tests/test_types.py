import pytest
from hypothesis import given, settings, strategies as st

from sflab.terms import ReductionKind, normalize, parse
from sflab.types import (
    Arrow,
    Forall,
    TVar,
    WrongClassError,
    cantor_unpair,
    classify,
    enumerate_types,
    free_type_vars,
    gamma_inf_decl,
    id_term,
    nth_type,
    parse_type,
    render_type,
    skeleton,
    strip_foralls,
    subst_ty,
    translate_minus,
    rename_apart,
    translate_plus,
    ty_alpha_eq,
    ty_size,
)

# The running eta-expansion example: ((forall Y.X) -> X) -> (X -> X).
ETAFAIL = parse_type("((forall Y.X) -> X) -> (X -> X)")
NAT = parse_type("forall Z. (Z -> Z) -> (Z -> Z)")


def test_parse_forall_body_extends_right():
    t = parse_type("forall X. (X -> X) -> X -> X")
    assert t == Forall("X", Arrow(Arrow(TVar("X"), TVar("X")), Arrow(TVar("X"), TVar("X"))))


def test_parse_arrow_right_assoc():
    assert parse_type("X -> Y -> X") == Arrow(TVar("X"), Arrow(TVar("Y"), TVar("X")))


def test_roundtrip_corpus():
    corpus = [render_type(t) for t in list(_iter_types(120))]
    assert len(corpus) >= 100
    for s in corpus:
        assert ty_alpha_eq(parse_type(s), parse_type(render_type(parse_type(s))))
        assert render_type(parse_type(s)) == s


def _iter_types(n):
    it = enumerate_types()
    for _ in range(n):
        yield next(it)


def test_alpha_equality():
    assert ty_alpha_eq(parse_type("forall X. X -> X"), parse_type("forall Y. Y -> Y"))
    assert not ty_alpha_eq(parse_type("forall X. X -> X"), parse_type("forall X. X -> Y"))


def test_subst_capture_avoiding():
    t = parse_type("forall Y. X -> Y")
    out = subst_ty(t, "X", TVar("Y"))
    # the substituted Y must not get captured by the binder
    assert ty_alpha_eq(out, parse_type("forall Z. Y -> Z"))


def test_classify_etafail_type():
    c = classify(ETAFAIL)
    assert c.forall_plus2 and not c.proper and not c.simple
    assert not c.forall_plus  # positive family but not proper


def test_classify_quantified_simple():
    c = classify(parse_type("forall X. (X -> X) -> (X -> X)"))
    assert c.pi and c.forall_plus2 and c.proper and c.forall_plus


def test_classify_negative_quantifier():
    c = classify(parse_type("(forall Y. Y -> Y) -> (X -> X)"))
    assert not c.forall_plus2
    assert c.forall_minus2


def test_classify_simple_in_both_families():
    c = classify(parse_type("(X -> X) -> Y"))
    assert c.simple and c.pi and c.sigma0 and c.forall_plus2 and c.forall_minus2


def test_classify_sigma():
    # (forall X. X -> X) -> Y is a Sigma0 type: one Pi argument, atomic tail.
    c = classify(parse_type("(forall X. X -> X) -> Y"))
    assert c.sigma0 and c.sigma and not c.pi
    c = classify(parse_type("forall Y. (forall X. X -> X) -> Y"))
    assert c.sigma and not c.sigma0


def test_classify_trivial_vs_proper():
    c = classify(parse_type("forall Y. X -> X"))
    assert c.forall_trivial and not c.proper
    c = classify(NAT)
    assert c.proper and not c.forall_trivial


def test_skeleton():
    assert skeleton(parse_type("forall X. (X -> X) -> (X -> X)")) == parse_type("(X -> X) -> (X -> X)")
    assert skeleton(TVar("X")) == TVar("X")
    assert skeleton(ETAFAIL) == parse_type("(X -> X) -> (X -> X)")


def test_translate_plus_etafail():
    assert ty_alpha_eq(translate_plus(ETAFAIL), parse_type("forall Y. (X -> X) -> (X -> X)"))


def test_translate_plus_variable():
    assert translate_plus(TVar("X")) == TVar("X")


def test_translate_plus_nat_is_quantifier_hoisting():
    assert ty_alpha_eq(translate_plus(NAT), parse_type("forall X. (X -> X) -> (X -> X)"))


def test_translate_plus_wrong_class():
    with pytest.raises(WrongClassError):
        translate_plus(parse_type("(forall Y. Y -> Y) -> X"))


def test_translate_minus_shape():
    # ((forall Y.X) -> X) is negative; its translation keeps the Pi argument.
    t = parse_type("(forall Y. X) -> X")
    out = translate_minus(t)
    assert ty_alpha_eq(out, t)


def test_translate_minus_atomic_degenerates():
    assert translate_minus(TVar("X")) == TVar("X")


def test_translate_plus_proper_inner_quantifier():
    # sigma = ((forall Y. Y -> Y) -> X) -> X has a positive proper quantifier
    t = parse_type("((forall Y. Y -> Y) -> X) -> X")
    out = translate_plus(t)
    assert ty_alpha_eq(out, parse_type("forall Y. (((Y -> Y) -> X) -> X)"))


def test_plus_is_prenex_with_skeleton_body():
    for t in _sample_classified(300, "forall_plus2"):
        # shadowed binders make "the" skeleton name-ambiguous; rename apart first
        t = rename_apart(t)
        p = translate_plus(t)
        assert classify(p).pi
        _, body = strip_foralls(p)
        assert body == skeleton(t)
        assert skeleton(p) == body


def test_minus_shape_property():
    for t in _sample_classified(300, "forall_minus2"):
        m = translate_minus(t)
        args, tail = _full_spine(m)
        assert isinstance(tail, TVar)
        for a in args:
            assert classify(a).pi


def _full_spine(t):
    args = []
    while isinstance(t, Arrow):
        args.append(t.dom)
        t = t.cod
    return args, t


def _sample_classified(n, flag):
    out = []
    it = enumerate_types()
    while len(out) < n:
        t = next(it)
        if getattr(classify(t), flag):
            out.append(t)
    return out


def test_trivial_proper_implies_simple():
    for t in _iter_types(800):
        c = classify(t)
        if c.forall_trivial and c.proper:
            assert c.simple
        if c.simple:
            assert c.pi and c.sigma0 and c.forall_plus2 and c.forall_minus2
        if c.forall_plus2 and c.forall_minus2:
            assert c.simple


def test_id_term_base():
    assert id_term(TVar("X")) == parse(r"\x.x")


def test_id_term_arrow():
    assert id_term(parse_type("X -> X")) == parse(r"\x.\y.x y")


def test_id_term_eta_reduces_to_identity():
    count = 0
    for t in _iter_types(400):
        if ty_size(t) > 6:
            break
        count += 1
        nf = normalize(id_term(t), ReductionKind.BETA_ETA, 10_000).result
        assert nf == parse(r"\x.x")
    assert count >= 50


def test_cantor_unpair_roundtrip():
    def pair(j, k):
        return (j + k) * (j + k + 1) // 2 + k

    for j in range(20):
        for k in range(20):
            assert cantor_unpair(pair(j, k)) == (j, k)


def test_gamma_inf_first_declaration():
    assert gamma_inf_decl(0) == nth_type(0) == TVar("X0")


def test_gamma_inf_constant_along_second_component():
    def pair(j, k):
        return (j + k) * (j + k + 1) // 2 + k

    t0 = gamma_inf_decl(pair(3, 0))
    for k in range(1, 10):
        assert gamma_inf_decl(pair(3, k)) == t0


def test_gamma_inf_every_type_recurs():
    hits = [i for i in range(10_000) if gamma_inf_decl(i) == TVar("X0")]
    assert len(hits) > 50
