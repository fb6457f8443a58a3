import random

import pytest

from ltlrhc.formulas import (
    And,
    Always,
    Atom,
    Eventually,
    FALSE,
    Implies,
    LassoWord,
    LtlSyntaxError,
    Next,
    Not,
    Release,
    TRUE,
    UnknownPropositionError,
    Until,
    eval_on_lasso,
    eval_prop,
    format_formula,
    parse_ltl,
    to_nnf,
)
from helpers import rand_formula, rand_lasso


class TestParse:
    def test_always_eventually(self):
        assert parse_ltl("G F base", {"base"}) == Always(Eventually(Atom("base")))

    def test_surveillance_conjunct(self):
        f = parse_ltl("G (base -> X (! base U survey))", {"base", "survey"})
        expected = Always(
            Implies(Atom("base"), Next(Until(Not(Atom("base")), Atom("survey"))))
        )
        assert f == expected

    def test_missing_operand_is_syntax_error(self):
        with pytest.raises(LtlSyntaxError):
            parse_ltl("a U", {"a"})

    def test_unknown_proposition(self):
        with pytest.raises(UnknownPropositionError):
            parse_ltl("a & c", {"a", "b"})

    def test_error_carries_position(self):
        with pytest.raises(LtlSyntaxError) as e:
            parse_ltl("a & & b", {"a", "b"})
        assert e.value.position == 4

    def test_precedence(self):
        # -> binds loosest and associates right; U binds tighter than &
        f = parse_ltl("a U b & c -> d -> e", {"a", "b", "c", "d", "e"})
        assert f == Implies(
            And(Until(Atom("a"), Atom("b")), Atom("c")),
            Implies(Atom("d"), Atom("e")),
        )

    def test_until_right_associative(self):
        f = parse_ltl("a U b U c", {"a", "b", "c"})
        assert f == Until(Atom("a"), Until(Atom("b"), Atom("c")))

    def test_comments_and_literals(self):
        f = parse_ltl("# a comment line\ntrue & a\n", {"a"})
        assert f == And(TRUE, Atom("a"))

    def test_without_declared_set_any_name_parses(self):
        assert parse_ltl("whatever", None) == Atom("whatever")


class TestPrintParseRoundTrip:
    def test_handpicked(self):
        for text in [
            "a U b U c",
            "(a U b) U c",
            "!a & b | c -> d",
            "G (a -> X (!a U b))",
            "F G a & G F b",
            "a R b R c",
            "X (a & b)",
            "!(a | b)",
        ]:
            f = parse_ltl(text, {"a", "b", "c", "d"})
            assert parse_ltl(format_formula(f), {"a", "b", "c", "d"}) == f

    def test_random_formulas(self):
        rng = random.Random(1)
        pi = ("a", "b", "c")
        for _ in range(400):
            f = rand_formula(rng, pi, depth=4)
            assert parse_ltl(format_formula(f), pi) == f


def _nnf_shape_ok(f) -> bool:
    """Negation only on atoms; no F/G/-> nodes remain."""
    if isinstance(f, Not):
        return isinstance(f.child, Atom)
    if isinstance(f, (Eventually, Always, Implies)):
        return False
    for attr in ("child", "left", "right"):
        sub = getattr(f, attr, None)
        if sub is not None and not _nnf_shape_ok(sub):
            return False
    return True


class TestNnf:
    def test_not_always_becomes_eventually_not(self):
        # F encoded through U per the normal form
        assert to_nnf(Not(Always(Atom("a")))) == Until(TRUE, Not(Atom("a")))

    def test_identity_on_literals(self):
        assert to_nnf(Atom("a")) == Atom("a")
        assert to_nnf(Not(Atom("a"))) == Not(Atom("a"))
        assert to_nnf(Not(TRUE)) == FALSE

    def test_negated_until_agrees_on_random_lassos(self):
        rng = random.Random(2)
        f = Not(Until(Atom("a"), Atom("b")))
        g = to_nnf(f)
        assert g == Release(Not(Atom("a")), Not(Atom("b")))
        for _ in range(1000):
            w = rand_lasso(rng, ("a", "b"))
            assert eval_on_lasso(g, w) == eval_on_lasso(f, w)

    def test_nnf_preserves_semantics_random(self):
        rng = random.Random(3)
        pi = ("a", "b")
        for _ in range(300):
            f = rand_formula(rng, pi, depth=4)
            g = to_nnf(f)
            assert _nnf_shape_ok(g)
            for _ in range(5):
                w = rand_lasso(rng, pi, max_prefix=4, max_cycle=4)
                assert eval_on_lasso(g, w) == eval_on_lasso(f, w)


class TestEvalOnLasso:
    def test_always_holds_on_cycle(self):
        assert eval_on_lasso(parse_ltl("G a", {"a"}), LassoWord.make([], [{"a"}]))

    def test_always_fails_when_cycle_lacks_it(self):
        w = LassoWord.make([{"a"}], [set()])
        assert not eval_on_lasso(parse_ltl("G a", {"a"}), w)

    def test_recurrent_pair_on_two_cycle(self):
        # hand expansion on ({a}{b})^w: at every even position a holds and b
        # follows, so (a & F b) holds there; hence F (a & F b) holds at every
        # position and the G closes over it
        f = parse_ltl("G (F (a & F b))", {"a", "b"})
        assert eval_on_lasso(f, LassoWord.make([], [{"a"}, {"b"}]))

    def test_strong_until_needs_its_right_side(self):
        w = LassoWord.make([], [{"a"}])
        assert not eval_on_lasso(parse_ltl("a U b", {"a", "b"}), w)
        assert eval_on_lasso(parse_ltl("a U b", {"a", "b"}), LassoWord.make([{"a"}], [{"b"}]))

    def test_next_wraps_into_cycle(self):
        w = LassoWord.make([{"a"}], [{"b"}])
        assert eval_on_lasso(parse_ltl("X b", {"a", "b"}), w)
        assert eval_on_lasso(parse_ltl("X X b", {"a", "b"}), w)

    def test_release_forever(self):
        assert eval_on_lasso(parse_ltl("a R b", {"a", "b"}), LassoWord.make([], [{"b"}]))
        assert not eval_on_lasso(parse_ltl("a R b", {"a", "b"}), LassoWord.make([], [{"b"}, set()]))

    def test_cycle_must_be_nonempty(self):
        with pytest.raises(ValueError):
            LassoWord.make([{"a"}], [])


class TestEvalProp:
    def test_basic(self):
        f = parse_ltl("a & !b", {"a", "b"})
        assert eval_prop(f, {"a"})
        assert not eval_prop(f, {"a", "b"})

    def test_temporal_rejected(self):
        with pytest.raises(ValueError):
            eval_prop(parse_ltl("X a", {"a"}), {"a"})
