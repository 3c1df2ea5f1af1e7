import math

import numpy as np
import pytest

from stlbezier.geometry import Polytope, normalized_margin
from stlbezier.stl import (And, Always, Eventually, FalseF, Interval, NegPred, Not, Or, Pred, STLSyntaxError,
                           TraceTooShort, TrueF, UnsupportedConstruct, Until, formula_horizon, is_nnf, parse,
                           sampled_robustness, to_nnf, to_text)

REGIONS = {
    "A": Polytope.box([0, 0], [2, 2]),
    "B": Polytope.box([1, 1], [3, 3]),
    "C": Polytope.box([-1, 0.5], [1.5, 2.5]),
}


def random_formula(rng, depth=3, nnf=False, allow_until=True):
    if depth == 0 or rng.random() < 0.25:
        name = rng.choice(list(REGIONS))
        if nnf:
            return NegPred(name) if rng.random() < 0.4 else Pred(name)
        return Pred(name)
    kinds = ["and", "or", "G", "F", "not"] + (["U"] if allow_until else [])
    if nnf:
        kinds.remove("not")
    k = rng.choice(kinds)
    sub = lambda: random_formula(rng, depth - 1, nnf, allow_until)  # noqa: E731
    a = float(rng.integers(0, 3)) * 0.5
    iv = Interval(a, a + float(rng.integers(1, 4)) * 0.5)
    if k == "and":
        return And((sub(), sub()))
    if k == "or":
        return Or((sub(), sub()))
    if k == "G":
        return Always(iv, sub())
    if k == "F":
        return Eventually(iv, sub())
    if k == "U":
        return Until(iv, sub(), sub())
    # keep Until out from under negations so every generated formula has an NNF
    return Not(random_formula(rng, depth - 1, nnf, allow_until=False))


def random_trace(rng, n=400, h=0.05):
    steps = rng.normal(scale=0.12, size=(n, 2))
    pts = np.cumsum(steps, axis=0) + rng.uniform(0, 2.5, 2)
    return np.arange(n) * h, pts


def boolean_eval(f, pts, i, h):
    """Direct boolean semantics at sample ``i`` (non-strict predicates)."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Pred):
        return bool(normalized_margin(REGIONS[f.name], pts[i]) >= 0)
    if isinstance(f, NegPred):
        return bool(normalized_margin(REGIONS[f.name], pts[i]) <= 0)
    if isinstance(f, Not):
        return not boolean_eval(f.arg, pts, i, h)
    if isinstance(f, And):
        return all(boolean_eval(a, pts, i, h) for a in f.args)
    if isinstance(f, Or):
        return any(boolean_eval(a, pts, i, h) for a in f.args)
    ia = math.ceil(f.interval.a / h - 1e-9)
    ib = math.floor(f.interval.b / h + 1e-9)
    if isinstance(f, Always):
        return all(boolean_eval(f.arg, pts, i + o, h) for o in range(ia, ib + 1))
    if isinstance(f, Eventually):
        return any(boolean_eval(f.arg, pts, i + o, h) for o in range(ia, ib + 1))
    if isinstance(f, Until):
        for o in range(ia, ib + 1):
            if boolean_eval(f.right, pts, i + o, h) and all(boolean_eval(f.left, pts, i + q, h)
                                                           for q in range(0, o + 1)):
                return True
        return False
    raise TypeError(f)


def horizon_oracle(f):
    kids = f.children()
    here = f.interval.b if hasattr(f, "interval") else 0.0
    return here + (max(horizon_oracle(k) for k in kids) if kids else 0.0)


def test_parse_reach_avoid():
    f = parse("G[0,15] !B & G[0,15] !Y & F[0,15] G[0,2] R & F[0,15] G[0,2] G1")
    assert isinstance(f, And) and len(f.args) == 4
    assert f.args[0] == Always(Interval(0, 15), Not(Pred("B")))
    assert f.args[2] == Eventually(Interval(0, 15), Always(Interval(0, 2), Pred("R")))


def test_parse_atoms_and_until():
    assert parse("R") == Pred("R")
    f = parse("!D1 U[0,2] K1")
    assert f == Until(Interval(0, 2), Not(Pred("D1")), Pred("K1"))


def test_precedence():
    f = parse("A | B & C")
    assert f == Or((Pred("A"), And((Pred("B"), Pred("C")))))
    g = parse("A U[0,1] B & C")
    assert g == And((Until(Interval(0, 1), Pred("A"), Pred("B")), Pred("C")))


def test_syntax_errors_carry_position():
    with pytest.raises(STLSyntaxError) as e:
        parse("G[0,1] (A &")
    assert e.value.line == 1
    with pytest.raises(STLSyntaxError) as e:
        parse("A &\n  B ^ C")
    assert (e.value.line, e.value.col) == (2, 5)
    with pytest.raises(STLSyntaxError, match="unknown operator"):
        parse("X[0,1] A")
    with pytest.raises(STLSyntaxError):
        parse("G[2,1] A")


def test_nnf_examples():
    assert to_nnf(parse("!(A & B)")) == Or((NegPred("A"), NegPred("B")))
    assert to_nnf(parse("!(G[0,2] A)")) == Eventually(Interval(0, 2), NegPred("A"))
    assert to_nnf(parse("!(F[0,2] !A)")) == Always(Interval(0, 2), Pred("A"))
    with pytest.raises(UnsupportedConstruct):
        to_nnf(parse("!(A U[0,1] B)"))


def test_horizon_examples():
    assert formula_horizon(Pred("R")) == 0
    assert formula_horizon(parse("F[0,15] G[0,2] R")) == 17


def test_random_formula_properties():
    rng = np.random.default_rng(0)
    for _ in range(100):
        f = random_formula(rng)
        g = to_nnf(f)
        assert is_nnf(g)
        assert to_nnf(g) == g
        assert formula_horizon(g) == formula_horizon(f) == horizon_oracle(f)
        assert parse(to_text(f)) == f


def test_sampled_robustness_examples():
    sq = {"R": Polytope.box([-1, -1], [1, 1]), "Obs": Polytope.box([2, 2], [3, 3])}
    assert sampled_robustness(Pred("R"), ([0.0], [[0.0, 0.0]]), sq) == 1.0
    t = np.linspace(0, 5, 51)
    pts = np.column_stack([np.linspace(-1, 1.7, 51), np.zeros(51)])
    m = sampled_robustness(parse("G[0,5] !Obs"), (t, pts), sq, horizon=5)
    assert m >= 0.3 and m == pytest.approx(2.0 - 0.0)
    with pytest.raises(TraceTooShort):
        sampled_robustness(parse("F[0,10] R"), (t, pts), sq)


def test_robustness_sign_matches_boolean_oracle():
    rng = np.random.default_rng(1)
    h = 0.05
    checked = 0
    while checked < 200:
        f = to_nnf(random_formula(rng, depth=3))
        t, pts = random_trace(rng, h=h)
        r = sampled_robustness(f, (t, pts), REGIONS)
        if abs(r) < 1e-12:
            continue
        assert (r > 0) == boolean_eval(f, pts, 0, h), to_text(f)
        checked += 1


def test_nnf_preserves_robustness_sign():
    rng = np.random.default_rng(2)
    for _ in range(100):
        f = random_formula(rng, depth=3)
        t, pts = random_trace(rng)
        a = sampled_robustness(f, (t, pts), REGIONS)
        b = sampled_robustness(to_nnf(f), (t, pts), REGIONS)
        assert a == pytest.approx(b, abs=1e-12)


def test_horizon_clipping_treats_overrun_as_vacuous():
    t = np.linspace(0, 2, 21)
    pts = np.tile([1.0, 1.0], (21, 1))
    # G over [0,5] only sees the first 2 s when the domain ends at 2
    assert sampled_robustness(parse("G[0,5] A"), (t, pts), REGIONS, horizon=2) == pytest.approx(1.0)
    assert sampled_robustness(parse("F[3,5] A"), (t, pts), REGIONS, horizon=2) == -math.inf
