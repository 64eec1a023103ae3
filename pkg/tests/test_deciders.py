import random
import warnings
from fractions import Fraction as F

import pytest

from conftest import fig1_ta, single_word_ta
from topaq.constructions import (
    build_priv,
    build_pub,
    embed_gadget,
    inclusion_gadget,
    strip_private,
    swap_gadget,
)
from topaq.deciders import (
    UndecidableClass,
    accepts_word,
    check_bounded,
    check_exists,
    check_opacity,
    is_oera,
    language_inclusion_discrete,
    nfa_accepts_expanded,
    parse_witness_description,
    verify_witness,
)
from topaq.nfa import from_region_automaton
from topaq.observers import (
    Dynamic,
    FirstN,
    Static,
    normalize_sequence,
    tick_construction,
    unfold_first_n,
    unfold_free,
)
from topaq.oracle import discrete_state_count, oracle_check
from topaq.regions import build_region_automaton
from topaq.ta import ClockConstraint, Guard, TimedWord, edge, make_ta, validate, validate_errors


def tw(*pairs):
    return TimedWord.of(*pairs)


def random_discrete_ta(rng):
    n_loc = rng.randint(2, 4)
    locs = [f"q{i}" for i in range(n_loc)]
    clocks = [f"c{i}" for i in range(rng.randint(0, 2))]
    letters = ["a", "b"][: rng.randint(1, 2)]

    def rguard():
        conj = []
        for x in clocks:
            if rng.random() < 0.4:
                conj.append(ClockConstraint(x, rng.choice(["<", "<=", "=", ">=", ">"]), rng.randint(0, 2)))
        return Guard(tuple(conj))

    edges = []
    for _ in range(rng.randint(1, 6)):
        a = rng.choice(letters + [None])
        resets = frozenset(x for x in clocks if rng.random() < 0.3)
        edges.append(edge(rng.choice(locs), rng.choice(locs), a, rguard(), resets))
    inv = {}
    for l in locs:
        if clocks and rng.random() < 0.3:
            inv[l] = Guard.of(ClockConstraint(rng.choice(clocks), "<=", rng.randint(0, 2)))
    private = {l for l in locs if rng.random() < 0.35}
    final = {l for l in locs if rng.random() < 0.4} or {locs[-1]}
    return make_ta(
        actions=letters, locations=locs, init=locs[0], final=final, private=private,
        clocks=clocks, invariant=inv, edges=edges, time_domain="discrete", name="rand",
    )


def definitive_oracle(ta, mode):
    states = discrete_state_count(ta)
    if states > 36:
        return None
    v = oracle_check(ta, mode, max_steps=states, node_cap=40_000)
    return None if v.status == "inconclusive" else v


class TestIsOera:
    def test_hand_built_oera(self, oera_guarded):
        assert is_oera(oera_guarded)

    def test_fig1_is_not(self, fig1):
        assert not is_oera(fig1)

    def test_epsilon_edge_resetting_clock(self, oera_guarded):
        bad = make_ta(
            actions=oera_guarded.actions, locations=oera_guarded.locations,
            init=oera_guarded.init, private=oera_guarded.private,
            final=oera_guarded.final, clocks=oera_guarded.clocks,
            invariant=dict(oera_guarded.invariant),
            edges=oera_guarded.edges + (edge("l0", "l0", None, resets={"xa"}),),
        )
        assert not is_oera(bad)

    def test_unused_letters_pair_with_leftover_clocks(self):
        ta = make_ta(
            actions={"a", "b"}, locations={"s", "f"}, init="s", final={"f"},
            clocks={"xa", "xb"}, edges=[edge("s", "f", "a", resets={"xa"})],
        )
        assert is_oera(ta)


class TestCheckExists:
    def test_fig1_holds_with_shared_witness(self, fig1):
        v = check_exists(fig1)
        assert v.holds is True
        assert accepts_word(build_priv(fig1), v.witness)
        assert accepts_word(build_pub(fig1), v.witness)

    def test_no_private_locations(self, fig1):
        plain = make_ta(
            actions=fig1.actions, locations=fig1.locations, init=fig1.init,
            final=fig1.final, clocks=fig1.clocks, invariant=dict(fig1.invariant),
            edges=fig1.edges,
        )
        assert check_exists(plain).holds is False

    def test_unreachable_finals(self):
        ta = make_ta(
            actions={"a"}, locations={"l0", "lp", "lf"}, init="l0", private={"lp"},
            final={"lf"}, clocks=set(), edges=[edge("l0", "lp", "a")],
        )
        assert check_exists(ta).holds is False

    def test_discrete_witness_is_integral(self, fig1_discrete):
        v = check_exists(fig1_discrete)
        assert v.holds is True
        assert all(t.denominator == 1 for t in v.witness.timestamps())


class TestCheckOpacityDiscrete:
    def test_fig1_discrete_weak_holds_full_violated(self, fig1_discrete):
        assert check_opacity(fig1_discrete, "weak").holds is True
        v = check_opacity(fig1_discrete, "full")
        assert v.holds is False and v.side == "pub-not-priv"
        assert accepts_word(build_pub(fig1_discrete), v.witness)
        assert not accepts_word(build_priv(fig1_discrete), v.witness)
        # the paper's example member is genuinely public-only too
        o = oracle_check(fig1_discrete, "full", max_steps=discrete_state_count(fig1_discrete))
        assert o.status == "violated" and o.witness == tw(("b", 3))

    def test_empty_sets_are_fully_opaque(self):
        ta = make_ta(
            actions={"a"}, locations={"l0", "lf"}, init="l0", final={"lf"},
            clocks=set(), edges=[], time_domain="discrete",
        )
        assert check_opacity(ta, "full").holds is True

    def test_dense_general_class_is_refused(self, fig1):
        with pytest.raises(UndecidableClass, match="undecidable"):
            check_opacity(fig1, "weak")

    def test_one_clock_without_silent_edges_refused_as_unimplemented(self):
        ta = make_ta(
            actions={"a", "b"}, locations={"s", "f"}, init="s", final={"f"},
            clocks={"x"}, edges=[edge("s", "f", "a"), edge("s", "f", "b")],
        )
        with pytest.raises(UndecidableClass, match="not primitive recursive"):
            check_opacity(ta, "weak")

    def test_oracle_engine_passthrough(self, fig1):
        v = check_opacity(fig1, "weak", engine="oracle", horizon=F(4), granularity=F(1, 2))
        assert v.holds is not False  # no violation found (dense: inconclusive)
        v = check_opacity(fig1, "full", engine="oracle", horizon=F(4), granularity=F(1, 2))
        assert v.holds is False
        assert F(2) < v.witness.timestamps()[0] <= F(3)

    def test_random_sweep_agrees_with_oracle(self):
        rng = random.Random(20240601)
        checked = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            while checked < 40:
                ta = random_discrete_ta(rng)
                if validate_errors(validate(ta)):
                    continue
                o_w = definitive_oracle(ta, "weak")
                o_f = definitive_oracle(ta, "full")
                if o_w is None or o_f is None:
                    continue
                checked += 1
                assert check_opacity(ta, "weak").holds == (o_w.status == "holds")
                assert check_opacity(ta, "full").holds == (o_f.status == "holds")


class TestCheckOpacityOera:
    def test_guarded_pair_violated(self, oera_guarded):
        v = check_opacity(oera_guarded, "weak")
        assert v.holds is False and v.side == "priv-not-pub"
        (a, t1), (b, t2) = v.witness.letters
        assert (a, b) == ("a", "b") and t2 - t1 < 1
        assert accepts_word(build_priv(oera_guarded), v.witness)
        assert not accepts_word(build_pub(oera_guarded), v.witness)
        o = oracle_check(oera_guarded, "weak", granularity=F(1, 2), horizon=F(4), max_steps=4)
        assert o.status == "violated"

    def test_unguarded_pair_holds(self, oera_unguarded):
        assert check_opacity(oera_unguarded, "weak").holds is True
        assert check_opacity(oera_unguarded, "full").holds is True

    def test_discrete_time_oera(self):
        from conftest import oera_pair_ta

        base = oera_pair_ta(True)
        discrete = make_ta(
            actions=base.actions, locations=base.locations, init=base.init,
            private=base.private, final=base.final, clocks=base.clocks,
            invariant=dict(base.invariant), edges=base.edges, time_domain="discrete",
        )
        v = check_opacity(discrete, "weak", engine="oera")
        assert v.holds is False
        assert all(t.denominator == 1 for t in v.witness.timestamps())

    def test_engine_requires_oera(self, fig1):
        with pytest.raises(UndecidableClass):
            check_opacity(fig1, "weak", engine="oera")

    def test_full_checks_both_sides(self, oera_guarded):
        # swap private marking: now the public side is strictly larger
        flipped = make_ta(
            actions=oera_guarded.actions, locations=oera_guarded.locations,
            init=oera_guarded.init, private={"l2"}, final=oera_guarded.final,
            clocks=oera_guarded.clocks, invariant=dict(oera_guarded.invariant),
            edges=oera_guarded.edges,
        )
        assert check_opacity(flipped, "weak").holds is True
        v = check_opacity(flipped, "full")
        assert v.holds is False and v.side == "pub-not-priv"


class TestMetamorphic:
    def corpus(self):
        rng = random.Random(424242)
        out = [fig1_ta("discrete")]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            while len(out) < 14:
                ta = random_discrete_ta(rng)
                if not validate_errors(validate(ta)):
                    out.append(ta)
        return out

    def test_full_equals_weak_plus_swapped_weak(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for ta in self.corpus():
                full = check_opacity(ta, "full").holds
                weak = check_opacity(ta, "weak").holds
                weak_swap = check_opacity(swap_gadget(ta), "weak").holds
                assert full == (weak and weak_swap)

    def test_weak_equals_embedded_full(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for ta in self.corpus():
                assert check_opacity(ta, "weak").holds == check_opacity(embed_gadget(ta), "full").holds

    def test_inclusion_gadget_matches_language_inclusion(self):
        rng = random.Random(99)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            done = 0
            while done < 10:
                a, b = random_discrete_ta(rng), random_discrete_ta(rng)
                if validate_errors(validate(a)) or validate_errors(validate(b)):
                    continue
                done += 1
                inc, _ = language_inclusion_discrete(strip_private(a), strip_private(b))
                assert inc == check_opacity(inclusion_gadget(a, b), "weak").holds

    def test_inclusion_gadget_reflexive(self, fig1_discrete):
        assert check_opacity(inclusion_gadget(fig1_discrete, fig1_discrete), "weak").holds is True

    def test_inclusion_gadget_against_empty(self):
        a = single_word_ta("a", 1, "discrete")
        b = make_ta(actions={"a"}, locations={"s"}, init="s", final=set(), clocks=set(),
                    edges=[], time_domain="discrete")
        v = check_opacity(inclusion_gadget(a, b), "weak")
        assert v.holds is False
        assert v.witness == tw(("a", 1))


class TestCheckBounded:
    def test_fig1_first1(self, fig1):
        assert check_bounded(fig1, FirstN(1), "weak").holds is True
        v = check_bounded(fig1, FirstN(1), "full")
        assert v.holds is False and v.side == "pub-not-priv"
        # the projected witness extends to a run of the public unfolding
        assert accepts_word(unfold_first_n(build_pub(fig1), 1), v.witness)
        assert not accepts_word(unfold_first_n(build_priv(fig1), 1), v.witness)

    def test_first0_weak_compares_empty_projections(self, fig1):
        assert check_bounded(fig1, FirstN(0), "weak").holds is True
        assert check_bounded(fig1, FirstN(0), "full").holds is True

    def test_first0_detects_empty_private_side(self):
        # private side empty, public side nonempty: weak holds, full fails on ε
        ta = make_ta(
            actions={"a"}, locations={"l0", "lp", "lf"}, init="l0", private={"lp"},
            final={"lf"}, clocks=set(), edges=[edge("l0", "lf", "a")],
        )
        assert check_bounded(ta, FirstN(0), "weak").holds is True
        v = check_bounded(ta, FirstN(0), "full")
        assert v.holds is False and v.witness == TimedWord(())

    def test_static_verdicts_invariant_under_normalization(self, fig1):
        rng = random.Random(31)
        for _ in range(8):
            raw = tuple(sorted(F(rng.randint(0, 4), rng.choice([1, 2])) for _ in range(rng.randint(1, 2))))
            v1 = check_bounded(fig1, Static(raw), "weak").holds
            v2 = check_bounded(fig1, Static(normalize_sequence(raw)), "weak").holds
            assert v1 == v2

    def test_static_agrees_with_oracle_violation(self, fig1):
        sel = Static((F(0), F(3, 2)))
        o = oracle_check(fig1, "full", sel, horizon=F(4), granularity=F(1, 2), max_steps=4)
        assert o.status == "violated"
        assert check_bounded(fig1, sel, "full").holds is False

    def test_dynamic_reduces_to_free_unfolding(self, fig1):
        direct = check_bounded(fig1, Dynamic(1), "weak")
        reduced = check_bounded(unfold_free(fig1, 1), FirstN(2), "weak")
        assert direct.holds == reduced.holds
        direct = check_bounded(fig1, Dynamic(1), "full")
        reduced = check_bounded(unfold_free(fig1, 1), FirstN(2), "full")
        assert direct.holds == reduced.holds

    def test_discrete_input_is_discretized(self, fig1_discrete):
        assert check_bounded(fig1_discrete, FirstN(1), "weak").holds is True
        v = check_bounded(fig1_discrete, FirstN(1), "full")
        assert v.holds is False
        assert all(t.denominator == 1 for t in v.witness.timestamps())


class TestVerifyWitness:
    def interval_ta(self):
        return make_ta(
            actions={"a"}, locations={"s", "f"}, init="s", final={"f"}, clocks={"c"},
            edges=[edge("s", "f", "a", Guard.of(ClockConstraint("c", ">", 2), ClockConstraint("c", "<", 3)))],
        )

    def test_worked_example(self):
        ra = build_region_automaton(tick_construction(self.interval_ta(), 1))
        acc, other = verify_witness(ra, None, "t^2 a f{0} f{1}")
        assert acc is True and other is None
        assert verify_witness(ra, None, "t^3 a f{0} f{1}")[0] is False
        assert verify_witness(ra, None, "t^2 a f{0,1}")[0] is False

    def test_two_automata(self, fig1):
        ra1 = build_region_automaton(tick_construction(build_priv(fig1), 1))
        ra2 = build_region_automaton(tick_construction(build_pub(fig1), 1))
        acc1, acc2 = verify_witness(ra1, ra2, "t b f{0} f{1}")
        assert acc1 is True and acc2 is True
        acc1, acc2 = verify_witness(ra1, ra2, "t^3 b f{0,1}")
        assert acc1 is False and acc2 is True

    def test_empty_description_on_epsilon_accepting_automaton(self):
        ta = make_ta(actions={"a"}, locations={"s"}, init="s", final={"s"}, clocks=set(), edges=[])
        ra = build_region_automaton(ta)
        assert verify_witness(ra, None, "")[0] is True

    def test_unknown_letter_is_an_error(self):
        ra = build_region_automaton(tick_construction(self.interval_ta(), 1))
        with pytest.raises(ValueError):
            verify_witness(ra, None, "t z f{0}")

    def test_matches_expanded_simulation(self):
        rng = random.Random(7)
        ra = build_region_automaton(tick_construction(self.interval_ta(), 1))
        m = from_region_automaton(ra)
        letters = [a for a in m.alphabet if a != "t"]
        for _ in range(60):
            tokens = []
            for _ in range(rng.randint(1, 5)):
                if rng.random() < 0.5:
                    tokens.append(f"t^{rng.randint(0, 40)}")
                else:
                    tokens.append(rng.choice(letters))
            desc = " ".join(tokens)
            parsed = parse_witness_description(desc)
            assert verify_witness(ra, None, desc)[0] == nfa_accepts_expanded(m, parsed)

    def test_huge_exponent_runs(self):
        ra = build_region_automaton(tick_construction(self.interval_ta(), 1))
        acc, _ = verify_witness(ra, None, f"t^{2**64} a f{{0}} f{{1}}")
        assert acc is False  # the guard caps waiting at 3 units
