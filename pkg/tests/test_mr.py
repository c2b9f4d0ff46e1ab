"""Lambda-calculus terms: typing, application, union, printing, equality."""

import pytest

from typeshift.mr import (
    App,
    Const,
    Lam,
    MrSyntaxError,
    MrTypeError,
    Pred,
    TermVar,
    TypedResult,
    apply,
    atom_counts,
    canonical_key,
    leaf_atoms,
    mr_equal,
    normalize,
    parse_expression,
    parse_expression_candidates,
    prefix_skeletons,
    print_mr,
    recompute_type,
    rename_apart,
    resolve_expr,
    skeleton,
    subterms,
    union,
)
from typeshift.typesys import Arrow, Base, BOOL, is_subtype, parse_type


def atom(domain, name, index=0) -> TypedResult:
    return domain.atom_candidates(name)[index]


# ---------------------------------------------------------------------------
# Application, the golden micro-steps


def test_apply_ground_function(domain):
    got = apply(atom(domain, "capital"), atom(domain, "texas"), domain.hierarchy)
    assert got is not None
    assert str(got.type) == "ct"
    assert print_mr(got.expr) == "(capital texas)"


def test_apply_binds_polymorphic_variable(domain):
    step1 = apply(atom(domain, "argmax"), atom(domain, "state"), domain.hierarchy)
    assert step1 is not None
    # 'a := st turns the remaining type into (st->i)->st.
    assert str(step1.type) == "(st->i)->st"
    assert list(step1.binding.as_dict().values()) == [Base("st")]
    resolved = resolve_expr(step1.expr, step1.binding)
    types = {str(a.type) for a in leaf_atoms(resolved) if a.name == "argmax"}
    assert types == {"(st->t)->(st->i)->st"}


def test_apply_accepts_contravariant_argument(domain):
    step1 = apply(atom(domain, "argmax"), atom(domain, "state"), domain.hierarchy)
    step2 = apply(step1, atom(domain, "size"), domain.hierarchy)
    assert step2 is not None and str(step2.type) == "st"
    full = apply(atom(domain, "capital"), step2, domain.hierarchy)
    assert full is not None and str(full.type) == "ct"
    assert print_mr(full.grounded_expr()) == "(capital (argmax state size))"


def test_apply_rejects_supertype_argument(domain):
    # capital wants st; a city will not do.
    assert apply(atom(domain, "capital"), atom(domain, "austin"), domain.hierarchy) is None
    # size wants lo and takes any of its descendants.
    assert apply(atom(domain, "size"), atom(domain, "austin"), domain.hierarchy) is not None


def test_apply_rejects_non_function_and_non_ground_argument(domain):
    texas = atom(domain, "texas")
    assert apply(texas, texas, domain.hierarchy) is None
    # argmax's own type still has free variables: not usable as an argument.
    assert apply(atom(domain, "argmax"), atom(domain, "argmax"), domain.hierarchy) is None


def test_apply_beta_reduces_lambda_templates(domain):
    from typeshift.lexicon import lookup_shifts

    longest = lookup_shifts(("longest",), None, domain)[0][1].template
    assert isinstance(longest.expr, Lam)
    got = apply(longest, atom(domain, "river"), domain.hierarchy)
    assert got is not None and str(got.type) == "rv"
    assert print_mr(got.grounded_expr()) == "(argmax river len)"
    assert mr_equal(
        got.grounded_expr(), parse_expression("(argmax river len)", domain).grounded_expr()
    )


def test_rename_apart_keeps_instances_independent(domain):
    a1 = rename_apart(atom(domain, "argmax").expr, "1")
    a2 = rename_apart(atom(domain, "argmax").expr, "2")
    t1 = next(leaf_atoms(a1)).type
    t2 = next(leaf_atoms(a2)).type
    assert t1 != t2  # distinct fresh variables
    assert str(t1) == str(t2) == "('a->t)->('a->i)->'a"  # printing hides the suffix


# ---------------------------------------------------------------------------
# Union


def test_union_takes_glb_of_inputs(domain):
    got = union(atom(domain, "major"), atom(domain, "city"), domain.hierarchy)
    assert got is not None
    assert str(got.type) == "ct->t"
    assert print_mr(got.expr) == "(lambda (x0 : ct) (and (major x0) (city x0)))"


def test_union_requires_boolean_outputs(domain):
    assert union(atom(domain, "major"), atom(domain, "size"), domain.hierarchy) is None
    assert union(atom(domain, "texas"), atom(domain, "major"), domain.hierarchy) is None


def test_union_requires_compatible_inputs(domain):
    # st and ct are siblings: nothing can be both.
    assert union(atom(domain, "state"), atom(domain, "city"), domain.hierarchy) is None


def test_union_nests_into_flat_conjunction(domain):
    mc = union(atom(domain, "major"), atom(domain, "city"), domain.hierarchy)
    three = union(mc, atom(domain, "city"), domain.hierarchy)
    assert three is not None
    key = canonical_key(three.expr)
    assert key.startswith("(lam v0 : ct (and ")
    assert key.count("p:city") == 2


# ---------------------------------------------------------------------------
# Printing and parsing


@pytest.mark.parametrize(
    "text",
    [
        "texas",
        "(capital texas)",
        "(argmax state size)",
        "(capital (argmax state size))",
        "(argmax (lambda (x0 : ct) (and (major x0) (city x0))) population)",
        "(lambda (x0 : rv->t) (argmax x0 len))",
    ],
)
def test_print_parse_fixpoint(text, domain):
    got = parse_expression(text, domain)
    assert print_mr(got.grounded_expr()) == text


def test_print_renames_binders_canonically(domain):
    a = parse_expression("(lambda (q : st) (state q))", domain)
    assert print_mr(a.expr) == "(lambda (x0 : st) (state x0))"


def test_parse_picks_first_declared_reading(domain):
    got = parse_expression("(size mississippi)", domain)
    leaf = [x for x in leaf_atoms(got.grounded_expr()) if x.name == "mississippi"]
    assert str(leaf[0].type) == "st"
    cands = parse_expression_candidates("(size mississippi)", domain)
    assert len(cands) == 2
    assert {str(next(iter(
        x for x in leaf_atoms(c.grounded_expr()) if x.name == "mississippi"
    )).type) for c in cands} == {"st", "rv"}


def test_parse_type_forced_reading(domain):
    got = parse_expression("(len mississippi)", domain)
    leaf = [x for x in leaf_atoms(got.grounded_expr()) if x.name == "mississippi"]
    assert str(leaf[0].type) == "rv"
    assert len(parse_expression_candidates("(len mississippi)", domain)) == 1


def test_parse_rejects_unknown_atom(domain):
    with pytest.raises(MrTypeError, match="unknown atom"):
        parse_expression("(capital narnia)", domain)


def test_parse_bare_predicate_in_parens(domain):
    got = parse_expression("(state)", domain)
    assert isinstance(got.expr, Pred) and str(got.type) == "st->t"


def test_parse_rejects_ill_typed(domain):
    with pytest.raises(MrTypeError):
        parse_expression("(capital austin)", domain)
    with pytest.raises(MrTypeError):
        parse_expression("(and texas texas)", domain)


def test_parse_conjunction(domain):
    got = parse_expression("(and (state texas) (major texas))", domain)
    assert got.type == BOOL


@pytest.mark.parametrize("text", ["", "(", ")", "(capital", "(lambda (x) x)", "((capital) texas"])
def test_parse_rejects_malformed(text, domain):
    with pytest.raises(MrSyntaxError):
        parse_expression(text, domain)


# ---------------------------------------------------------------------------
# Equality


def commuted(text_a: str, text_b: str, domain) -> tuple[bool, bool]:
    a = parse_expression(text_a, domain).grounded_expr()
    b = parse_expression(text_b, domain).grounded_expr()
    return mr_equal(a, b), oracle_equal(a, b)


def oracle_equal(a, b) -> bool:
    """Independent canonicalizer: rename binders by depth, sort conjuncts."""

    def norm(x, depth, env):
        if isinstance(x, Const):
            return ("c", x.name, str(x.type))
        if isinstance(x, Pred):
            return ("p", x.name, str(x.type))
        if isinstance(x, TermVar):
            return ("v", env.get(x.name, x.name), "")
        if isinstance(x, Lam):
            inner = dict(env, **{x.var.name: depth})
            return ("lam", str(x.var.type), norm(x.body, depth + 1, inner))
        conj = flat_and(x)
        if conj is not None:
            return ("and",) + tuple(sorted(map(repr, (norm(c, depth, env) for c in conj))))
        return ("app", norm(x.fun, depth, env), norm(x.arg, depth, env))

    def flat_and(x):
        if (
            isinstance(x, App)
            and isinstance(x.fun, App)
            and isinstance(x.fun.fun, Pred)
            and x.fun.fun.name == "and"
        ):
            l = flat_and(x.fun.arg) or [x.fun.arg]
            r = flat_and(x.arg) or [x.arg]
            return l + r
        return None

    return norm(a, 0, {}) == norm(b, 0, {})


def test_mr_equal_commuted_conjunction(domain):
    got, want = commuted(
        "(and (state texas) (major texas))", "(and (major texas) (state texas))", domain
    )
    assert got and want


def test_mr_equal_alpha_insensitive(domain):
    a = parse_expression("(lambda (p : st) (state p))", domain).grounded_expr()
    b = parse_expression("(lambda (q : st) (state q))", domain).grounded_expr()
    assert mr_equal(a, b) and oracle_equal(a, b)


def test_mr_equal_distinguishes_constants(domain):
    got, want = commuted("(capital texas)", "(capital georgia)", domain)
    assert not got and not want


def test_mr_equal_distinguishes_readings(domain):
    cands = parse_expression_candidates("(size mississippi)", domain)
    assert not mr_equal(cands[0].grounded_expr(), cands[1].grounded_expr())
    assert skeleton(cands[0].grounded_expr()) == skeleton(cands[1].grounded_expr())


def test_mr_equal_association_of_and(domain):
    a = "(and (and (major texas) (state texas)) (major texas))"
    b = "(and (major texas) (and (state texas) (major texas)))"
    got, want = commuted(a, b, domain)
    assert got and want


def test_mr_equal_agrees_with_oracle_on_corpus(domain, train_examples):
    golds = [ex.gold for ex in train_examples]
    for i, a in enumerate(golds):
        for j, b in enumerate(golds):
            assert mr_equal(a, b) == oracle_equal(a, b), (i, j)


# ---------------------------------------------------------------------------
# Structure helpers


def test_subterms_and_atom_counts(domain):
    e = parse_expression("(capital (argmax state size))", domain).grounded_expr()
    names = sorted(a.name for a in leaf_atoms(e))
    assert names == ["argmax", "capital", "size", "state"]
    counts = atom_counts(e)
    assert counts[("pred", "capital")] == 1
    assert ("const", "texas") not in counts
    assert sum(1 for _ in subterms(e)) == 7  # 4 leaves + 3 applications


def test_prefix_skeletons_cover_growth_stages(domain):
    gold = parse_expression(
        "(argmax (lambda (x : ct) (and (major x) (city x))) population)", domain
    ).grounded_expr()
    ps = prefix_skeletons(gold)
    stage = union(atom(domain, "major"), atom(domain, "city"), domain.hierarchy)
    assert skeleton(stage.expr) in ps
    assert skeleton(atom(domain, "major").expr) in ps
    assert skeleton(parse_expression("(capital texas)", domain).expr) not in ps


def test_prefix_skeletons_include_application_prefixes(domain):
    gold = parse_expression("(capital (argmax state size))", domain).grounded_expr()
    ps = prefix_skeletons(gold)
    partial = apply(atom(domain, "argmax"), atom(domain, "state"), domain.hierarchy)
    assert skeleton(partial.grounded_expr()) in ps


def test_normalize_is_idempotent_on_corpus(domain, train_examples):
    for ex in train_examples:
        assert normalize(ex.gold) == ex.gold


def test_recompute_type_on_corpus_golds(domain, train_examples):
    for ex in train_examples:
        t = recompute_type(ex.gold, domain.hierarchy)
        gold_t = parse_expression(ex.mr_text, domain).type
        assert is_subtype(t, gold_t, domain.hierarchy)
