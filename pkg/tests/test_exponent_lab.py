import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aplab.errors import AplabError
from aplab.exponent_lab import (
    EPS,
    ZERO,
    ConstraintSystem,
    EpsRational,
    Infeasible,
    LinearConstraint,
    Substitution,
    Unbounded,
    builtin_system,
    catalog_names,
    chain_groups,
    check_point,
    constant_table,
    entails,
    eps_compare,
    find_point,
    findings,
    fm_eliminate,
    implies,
    maximize,
    parse_constraints,
    parse_linear,
    run_chains,
)

E = EpsRational
EPS_VALUE = 1e-4


def er(text):
    return EpsRational.coerce(text)


# ---------------------------------------------------------------------------
# eps arithmetic

small = st.fractions(min_value=-5, max_value=5, max_denominator=12)
eps_values = st.builds(EpsRational, small, small)


def test_eps_compare_examples():
    assert eps_compare(E(Fraction(1, 2), 1), E(Fraction(1, 2), -2)) == 1
    assert eps_compare(E(Fraction(17, 32)), E(Fraction(127, 224), -1)) == -1
    assert eps_compare(E(0, 0), E(0, 0)) == 0
    assert Fraction(17, 32) == Fraction(119, 224)


def test_eps_parsing_and_rendering():
    assert er("17/32 - 3e") == E(Fraction(17, 32), -3)
    assert str(E(Fraction(17, 32), -3)) == "17/32 - 3e"
    assert er("1/2") == E(Fraction(1, 2))
    assert E(0, Fraction(7, 8)) == Fraction(7, 8) * EPS


def test_eps_products_rejected():
    with pytest.raises(AplabError):
        EPS * EPS
    with pytest.raises(AplabError):
        E(1) / EPS
    assert (E(1, 2) * 3) == E(3, 6)


@given(eps_values, eps_values, eps_values)
def test_eps_order_total_and_additive(u, v, w):
    assert sum([u < v, u == v, v < u]) == 1
    assert eps_compare(u, v) == -eps_compare(v, u)
    if u < v:
        assert u + w < v + w
        assert not v < u
    if u < v and v < w:
        assert u < w
    # the symbolic order is the order at every small enough positive eps
    delta = Fraction(1, 10**6)
    if u != v:
        assert (u < v) == (u.at(delta) < v.at(delta))


@given(eps_values, st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=10))
def test_eps_positive_scaling_preserves_order(u, k):
    v = u + EPS
    assert u * k < v * k


# ---------------------------------------------------------------------------
# parsing and systems


def test_parse_linear_and_chains():
    coeffs, const = parse_linear("7q + 12r + 10s - 4 + 18e")
    assert coeffs == {"q": 7, "r": 12, "s": 10} and const == E(-4, 18)
    rows = parse_constraints("2s < r < 1/32 - e")
    assert [str(r) for r in rows] == ["-r + 2s < 0", "r < 1/32 - e"]
    eq = parse_constraints("n + m = 1")
    assert len(eq) == 2 and not any(r.strict for r in eq)
    assert str(parse_constraints("q > 1/2")[0]) == "-q < -1/2"
    with pytest.raises(AplabError):
        parse_constraints("1 < 2")
    with pytest.raises(AplabError):
        parse_constraints("q + r")


def test_builtin_catalog():
    assert len(catalog_names()) == 19
    cons0 = builtin_system("cons0")
    assert cons0.symbols == ("q", "r", "s", "t")
    assert {c.label for c in cons0.constraints} == {
        "q + r < 1/2 + e",
        "q + 2s < 1/2 - 2e",
        "2s < r < 1/32 - e",
        "t = s",
    }
    maynard = builtin_system("maynard_bilinear")
    assert maynard.render() == ["q <= 10/21", "r <= 1/21 - e"]
    assert "15/35" in builtin_system("propQ5_4").description
    with pytest.raises(AplabError):
        builtin_system("unknown")


def test_nm_systems_tie_n_and_m():
    for name in ("fouvry", "small_divisor", "zhang1", "zhang2"):
        rows = builtin_system(name).render()
        assert "m + n <= 1" in rows and "-m - n <= -1" in rows, name
    rows = builtin_system("krough").render()
    assert "m + n1 + n2 + n3 <= 1" in rows and "-m - n1 - n2 - n3 <= -1" in rows


def test_check_point_cons0():
    cons0 = builtin_system("cons0")
    ok, bad = check_point(cons0, {"q": "15/32", "r": "1/32 - 2e", "s": "1/64 - 2e", "t": "1/64 - 2e"})
    assert ok and bad is None
    ok, bad = check_point(cons0, {"q": "15/32 + 2e", "r": "1/32 - e", "s": "1/64 - 2e", "t": "1/64 - 2e"})
    assert not ok and str(bad) == "q + r < 1/2 + e"
    with pytest.raises(AplabError):
        check_point(cons0, {"q": 0})


def test_origin_satisfies_positive_bounds():
    sys_ = ConstraintSystem.from_text("pos", ["q + r < 1", "3q - r <= 1/2 + e"])
    assert check_point(sys_, {"q": 0, "r": 0})[0]


def test_substitution():
    c = parse_constraints("q + r < 17/32")[0]
    sub = Substitution.from_text({"q": "q1 + 2q3", "r": "q2"}).apply(c)
    assert sub.coeffs == {"q1": 1, "q2": 1, "q3": 2} and sub.bound == E(Fraction(17, 32))
    shifted = Substitution.from_text({"q": "q1 + e"}).apply(c)
    assert shifted.bound == E(Fraction(17, 32), -1)


# ---------------------------------------------------------------------------
# Fourier-Motzkin


def test_fm_examples():
    s = ConstraintSystem.from_text("a", ["x < 1", "-x < 0"], implicit_nonneg=False)
    out = fm_eliminate(s, "x")
    assert out.symbols == () and out.constraints == ()
    s = ConstraintSystem.from_text("b", ["q + r < 1/2 + e", "-r < 0"], implicit_nonneg=False)
    assert fm_eliminate(s, "r").render() == ["q < 1/2 + e"]


def test_fm_cons0_projection_binding_row():
    proj = fm_eliminate(fm_eliminate(builtin_system("cons0"), "t"), "r")
    assert "q + 2s < 1/2 - 2e" in proj.render()
    # binding: the sup of q + 2s on the projection is exactly that bound
    sup = maximize(proj, "q + 2s")
    assert sup.value == E(Fraction(1, 2), -2) and not sup.attained


def test_fm_keeps_infeasibility_visible():
    s = ConstraintSystem.from_text("c", ["x < 0", "-x < 0"], implicit_nonneg=False)
    out = fm_eliminate(s, "x")
    assert out.render() == ["0 < 0"]
    with pytest.raises(AplabError):
        fm_eliminate(s, "y")


def _extends(system, sym, point):
    """Exact 1-D feasibility of ``sym`` once the other coordinates are fixed."""
    lo = hi = None
    lo_s = hi_s = False
    for c in system.all_constraints():
        a = c.coeffs.get(sym, Fraction(0))
        rest = ZERO
        for s, v in c.coeffs.items():
            if s != sym:
                rest = rest + point[s] * v
        b = c.bound - rest
        if a == 0:
            if not (ZERO < b or (ZERO == b and not c.strict)):
                return False
        elif a > 0:
            v = b / a
            if hi is None or v < hi or (v == hi and c.strict):
                hi, hi_s = v, c.strict or (hi is not None and v == hi and hi_s)
        else:
            v = b / a
            if lo is None or v > lo or (v == lo and c.strict):
                lo, lo_s = v, c.strict or (lo is not None and v == lo and lo_s)
    if lo is None or hi is None:
        return True
    return lo < hi or (lo == hi and not lo_s and not hi_s)


coef = st.integers(-3, 3)


@st.composite
def small_systems(draw):
    n = draw(st.integers(2, 4))
    syms = ["a", "b", "c", "d"][:n]
    rows = []
    for _ in range(draw(st.integers(1, 5))):
        coeffs = {s: Fraction(draw(coef)) for s in syms}
        if not any(coeffs.values()):
            coeffs[syms[0]] = Fraction(1)
        bound = E(Fraction(draw(st.integers(-4, 8)), 4), draw(st.integers(-2, 2)))
        rows.append(LinearConstraint(coeffs, bound, draw(st.booleans())))
    return ConstraintSystem("rand", syms, rows, draw(st.booleans()))


GRID = [E(Fraction(k, 4), d) for k in (-2, 0, 1, 2, 4) for d in (-1, 0, 1)]


@settings(max_examples=1000, deadline=None)
@given(small_systems(), st.data())
def test_fm_projection_is_exact(system, data):
    sym = data.draw(st.sampled_from(system.symbols))
    proj = fm_eliminate(system, sym)
    rest = [s for s in system.symbols if s != sym]
    for _ in range(12):
        point = {s: data.draw(st.sampled_from(GRID)) for s in rest}
        assert proj.check_point(point)[0] == _extends(system, sym, point)


def _grid_feasible(system, eps, step=0.125, span=(-2, 2)):
    vals = np.arange(span[0], span[1] + step / 2, step)
    mesh = np.meshgrid(*[vals] * len(system.symbols), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    A, b, strict = _as_arrays(system, eps)
    lhs = pts @ A.T
    return bool(np.any(np.all(np.where(strict, lhs < b - 1e-12, lhs <= b + 1e-12), axis=1)))


def _as_arrays(system, eps):
    rows = system.all_constraints()
    A = np.array([[float(c.coeffs.get(s, 0)) for s in system.symbols] for c in rows])
    b = np.array([float(c.bound.at(Fraction(eps))) for c in rows])
    strict = np.array([c.strict for c in rows])
    return A, b, strict


@settings(max_examples=200, deadline=None)
@given(small_systems())
def test_find_point_against_grid(system):
    point = find_point(system)
    if point is not None:
        assert check_point(system, point)[0]
    if system.symbols and len(system.symbols) <= 3 and _grid_feasible(system, 1e-3):
        assert point is not None


# ---------------------------------------------------------------------------
# maximize


def test_maximize_examples():
    bfi = maximize(builtin_system("bfi"), "q + r")
    assert bfi.value == E(Fraction(29, 56)) and not bfi.attained
    assert check_point(builtin_system("bfi"), {"q": "0.32", "r": str(Fraction(29, 56) - Fraction(32, 100) - Fraction(1, 10**6))})[0]
    cons = maximize(builtin_system("cons0"), "q + r + 2s")
    assert cons.value == E(Fraction(17, 32), -3) and not cons.attained
    one = maximize(ConstraintSystem.from_text("t", ["q <= 1"]), "q")
    assert one.value == E(1) and one.attained
    mb = maximize(builtin_system("maynard_bilinear"), "q + r")
    assert mb.value == E(Fraction(11, 21), -1) and mb.attained
    assert str(bfi) == "29/56 (not attained)"


def test_maximize_errors():
    with pytest.raises(Unbounded):
        maximize(ConstraintSystem.from_text("u", ["q - r < 1"]), "q")
    with pytest.raises(Infeasible):
        maximize(ConstraintSystem.from_text("i", ["q < 0"]), "q")
    with pytest.raises(AplabError):
        maximize(builtin_system("bfi"), "q + z")


def test_every_catalog_system_is_feasible():
    for name in catalog_names():
        point = find_point(builtin_system(name))
        assert point is not None, name
        assert check_point(builtin_system(name), point)[0], name


SMALL_CATALOG = [n for n in catalog_names() if len(builtin_system(n).symbols) <= 3]


def _grid_max(system, coeffs, eps, per_axis):
    syms = system.symbols
    uppers = []
    for s in syms:
        try:
            uppers.append(float(maximize(system, s).value.at(Fraction(eps))))
        except Unbounded:
            uppers.append(2.0)
    axes = [np.linspace(0.0, u, per_axis) for u in uppers]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    A, b, strict = _as_arrays(system, eps)
    lhs = pts @ A.T
    ok = np.all(np.where(strict, lhs < b - 1e-12, lhs <= b + 1e-12), axis=1)
    c = np.array([float(coeffs.get(s, 0)) for s in syms])
    vals = pts[ok] @ c
    steps = np.array([u / (per_axis - 1) for u in uppers])
    return vals.max(), float(np.abs(c) @ steps), uppers


@pytest.mark.parametrize("name", SMALL_CATALOG)
def test_maximize_against_grid_search(name):
    system = builtin_system(name)
    per_axis = 400 if len(system.symbols) == 2 else 120
    objectives = [{s: 1 for s in system.symbols}] + [{s: 1} for s in system.symbols]
    objectives.append({s: i + 1 for i, s in enumerate(system.symbols)})
    for obj in objectives:
        try:
            sup = maximize(system, obj)
        except Unbounded:
            continue
        best, tol, _ = _grid_max(system, obj, EPS_VALUE, per_axis)
        exact = float(sup.value.at(Fraction(EPS_VALUE)))
        assert best <= exact + 1e-12, (name, obj)
        assert best >= exact - 4 * tol, (name, obj, best, exact)


# ---------------------------------------------------------------------------
# entailment


def test_implies_examples():
    prem = ConstraintSystem.from_text("p", ["q1 + q2 < 1/2 + e", "q2 < 1/32 - e"])
    (v,) = implies(prem, Substitution.identity(), parse_constraints("7q1 + 23q2 < 4 - 9e"))
    assert v.status == "entailed" and v.margin == ZERO and not v.attained

    (v,) = implies(
        builtin_system("propQ5_4"),
        Substitution.from_text({"q": "q1", "r": "q2 + 2q3"}),
        parse_constraints("q + r < 8/15 - 30e"),
    )
    assert v.status == "entailed" and v.sup == E(Fraction(17, 32), -3)

    neg = ConstraintSystem.from_text("n", ["q < 0"], implicit_nonneg=False)
    (v,) = implies(neg, Substitution.identity(), parse_constraints("q < 1"))
    assert v.status == "entailed" and v.margin == E(1)


def test_refuted_verdict_carries_witness():
    prem = ConstraintSystem.from_text("p", ["q < 1"])
    v = entails(prem, parse_constraints("q < 1/2")[0])
    assert v.status == "refuted"
    assert check_point(prem, v.witness)[0]
    assert not parse_constraints("q < 1/2")[0].holds(v.witness)


def test_rescaled_verdict():
    prem = ConstraintSystem.from_text("p", ["q < 1 - e"])
    v = entails(prem, parse_constraints("q < 1 - 5e")[0])
    assert v.status == "entailed_rescaled" and v.rescale == 5


def test_unbounded_verdict():
    prem = ConstraintSystem.from_text("p", ["q - r < 1"])
    assert entails(prem, parse_constraints("q < 2")[0]).status == "unbounded"


def test_unmapped_conclusion_symbols():
    with pytest.raises(AplabError):
        implies(builtin_system("bfi"), Substitution.identity(), parse_constraints("q + z < 1"))


def _statuses():
    return {g: [(v.conclusion, v.status, v.rescale) for v in vs] for g, vs in run_chains().items()}


def test_chain_verdicts_frozen():
    st_ = _statuses()
    flat = [s for vs in st_.values() for _, s, _ in vs]
    assert len(flat) == 40
    assert flat.count("entailed") == 30
    assert flat.count("entailed_rescaled") == 3
    assert flat.count("refuted") == 7
    basic = dict((c, s) for c, s, _ in st_["type_ii_basic/literal"])
    assert basic == {"q + r < 17/32": "refuted", "q + r <= 127/224 - e": "entailed"}
    zl = dict((c, s) for c, s, _ in st_["type_ii_zhang/literal"])
    assert zl.pop("r < q + 3s") == "entailed"
    assert set(zl.values()) == {"refuted"}
    zs = {c: (s, k) for c, s, k in st_["type_ii_zhang/squared"]}
    assert zs["q + 2s < 1/2 - 2e"] == ("entailed", None)
    assert zs["q + 2s < 1/2 - 20e"] == ("entailed_rescaled", 10)
    assert zs["2q + r + s < 1 - 20e"] == ("entailed_rescaled", 20)
    assert zs["7q + 12r + 10s < 4 - 20e"][0] == "entailed"
    sv = {c: (s, k) for c, s, k in st_["sieve_vbounds"]}
    assert sv["2q + r + s < 1 - 10e"] == ("entailed_rescaled", 10)
    assert all(s == "entailed" for c, (s, _) in sv.items() if c != "2q + r + s < 1 - 10e")
    for g in ("power_chain", "three_primes", "zhang_style/first", "zhang_style/second", "type_ii_basic/squared"):
        assert all(s == "entailed" for _, s, _ in st_[g]), g


def _equalities(system):
    """Pairs of opposite non-strict rows, as (coeffs, bound) equations."""
    rows = [c for c in system.constraints if not c.strict]
    eqs = []
    for i, c in enumerate(rows):
        for d in rows[i + 1 :]:
            if {s: -v for s, v in c.coeffs.items()} == d.coeffs and c.bound == -d.bound:
                eqs.append((c.coeffs, c.bound))
    return eqs


def _sample_feasible(system, eps, n, rng, max_rounds=200):
    """Rejection sampling in a box, with equality-determined symbols solved exactly."""
    syms = list(system.symbols)
    solved = []
    for coeffs, bound in _equalities(system):
        dep = next(s for s in reversed(list(coeffs)) if s not in [d for d, *_ in solved])
        solved.append((dep, coeffs, float(bound.at(Fraction(eps)))))
    free = [s for s in syms if s not in [d for d, *_ in solved]]
    uppers = np.array([float(maximize(system, s).value.at(Fraction(eps))) for s in free])
    A, b, strict = _as_arrays(system, eps)
    eq_rows = np.array([not c.strict for c in system.all_constraints()])
    got, total = [], 0
    for _ in range(max_rounds):
        cols = dict(zip(free, (rng.random((100_000, len(free))) * uppers).T))
        for dep, coeffs, bound in solved:
            rest = sum(float(v) * cols[s] for s, v in coeffs.items() if s != dep)
            cols[dep] = (bound - rest) / float(coeffs[dep])
        pts = np.stack([cols[s] for s in syms], axis=1)
        lhs = pts @ A.T
        slack = np.where(eq_rows, 1e-12, 0.0)
        ok = np.all(np.where(strict, lhs < b, lhs <= b + slack), axis=1)
        got.append(pts[ok])
        total += int(ok.sum())
        if total >= n:
            return np.concatenate(got)[:n]
    raise AssertionError(f"only {total} feasible samples for {system.name}")


@pytest.mark.parametrize("group", chain_groups(), ids=lambda g: g.name)
def test_entailed_verdicts_survive_sampling(group):
    rng = np.random.default_rng(5)
    premises = group.premise_system()
    subst = Substitution.from_text(group.subst)
    verdicts = group.run()
    for text, v in zip(group.conclusions, verdicts):
        if not v.ok:
            continue
        eps = EPS_VALUE
        system = premises
        if v.status == "entailed_rescaled":
            system = ConstraintSystem(
                premises.name,
                premises.symbols,
                [LinearConstraint(c.coeffs, E(c.bound.const_part, c.bound.eps_coeff * v.rescale), c.strict)
                 for c in premises.constraints],
            )
        pts = _sample_feasible(system, eps, 10**4, rng)
        c = subst.apply(parse_constraints(text)[0])
        vec = np.array([float(c.coeffs.get(s, 0)) for s in premises.symbols])
        lhs = pts @ vec
        bound = float(c.bound.at(Fraction(eps)))
        assert np.all(lhs < bound + 1e-12 if c.strict else lhs <= bound + 1e-12), text


@pytest.mark.parametrize("group", chain_groups(), ids=lambda g: g.name)
def test_refuted_witnesses_are_genuine(group):
    premises = group.premise_system()
    subst = Substitution.from_text(group.subst)
    for text, v in zip(group.conclusions, group.run()):
        if v.status != "refuted":
            continue
        assert check_point(premises, v.witness)[0]
        assert not subst.apply(parse_constraints(text)[0]).holds(v.witness)


def test_findings_present():
    got = {f.name: f for f in findings()}
    assert got["qs2_step/literal"].status == "refuted"
    assert got["qs2_step/squared"].status == "entailed"
    printed = got["cons0_printed_tuple"]
    assert printed.status == "violated" and "q + r < 1/2 + e" in printed.data["violated"]
    assert got["cons0_shifted_tuple"].status == "holds"
    assert got["optimal_triple/15/35"].status == "violated"
    assert got["optimal_triple/15/35"].data["violated"] == ["q2 < 1/32 - e"] or "q2" in got["optimal_triple/15/35"].detail
    assert got["cons0_supremum"].data["sup"] == E(Fraction(17, 32), -3).as_json()
    assert any(n.startswith("rescale/") for n in got)


# ---------------------------------------------------------------------------
# constants


def test_constants_rendering():
    t = constant_table()
    assert t["beta_threshold"].rendered() == "0.2843"
    assert t["one_minus"].rendered() == "0.7156"
    assert t["carmichael"].rendered() == "0.3389"
    assert t["quadrilinear"].rendered() == "0.53125"
    assert t["maynard"].rendered() == "0.5238"
    assert t["bfi"].rendered() == "0.5178"
    assert t["type_ii_basic"].exact == Fraction(127, 224)
    assert t["beta_threshold"].rendered(8) == "0.28431124"
    assert float(t["carmichael"].value) == pytest.approx(0.4736 * (1 - 15 / (32 * np.exp(0.5))))
