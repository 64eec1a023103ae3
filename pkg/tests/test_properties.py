"""Cross-module invariants that tie the abstraction layers together."""

import random
import warnings
from fractions import Fraction as F

from topaq.constructions import build_priv, build_pub
from topaq.deciders import accepts_word, check_exists, check_opacity
from topaq.nfa import from_region_automaton, strip_ticks_before_suffix
from topaq.observers import FirstN, project, tick_construction
from topaq.oracle import discrete_state_count, oracle_check, trace_sets
from topaq.regions import (
    TICK_LETTER,
    augment_ticks,
    build_region_automaton,
    tick_decode,
)
from topaq.ta import ClockConstraint, Guard, edge, make_ta, validate, validate_errors


def random_discrete_automaton(rng):
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


def test_discrete_tick_words_decode_to_accepted_traces(fig1_discrete):
    """Every word of the ticked region automaton reconstructs a timed word of
    the original discrete automaton."""
    ra = build_region_automaton(augment_ticks(fig1_discrete))
    words = from_region_automaton(ra).language_upto(6)
    assert words
    p, q, complete = trace_sets(fig1_discrete, F(5), 6, F(1))
    assert complete
    for word in words:
        decoded = tick_decode(word)
        assert decoded in p | q
        assert accepts_word(fig1_discrete, decoded)


def test_exists_follows_from_weak_with_nonempty_private(fig1_discrete):
    # non-vacuous on the worked example, implication-checked on the sweep
    assert check_opacity(fig1_discrete, "weak").holds
    assert check_exists(fig1_discrete).holds is True

    rng = random.Random(5150)
    trials = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while trials < 60:
            ta = random_discrete_automaton(rng)
            if validate_errors(validate(ta)) or discrete_state_count(ta) > 36:
                continue
            trials += 1
            p, _, complete = trace_sets(ta, F(6), 8, F(1), node_cap=50_000)
            if not complete or not p:
                continue
            if check_opacity(ta, "weak").holds:
                assert check_exists(ta).holds is True


def test_bounded_comparison_languages_are_n_bounded(fig1):
    for n in (0, 1, 2):
        for part in (build_priv(fig1), build_pub(fig1)):
            m = from_region_automaton(build_region_automaton(tick_construction(part, n)))
            suffix = frozenset(a for a in m.alphabet if a.startswith("f{"))
            stripped = strip_ticks_before_suffix(m, suffix, TICK_LETTER)
            sigma = set("ab")
            for word in stripped.language_upto(7):
                assert sum(1 for tok in word if tok in sigma) <= n


def test_observed_projections_respect_switch_times(fig1):
    # every projected trace the pipeline compares comes from a real trace
    p, q, complete = trace_sets(fig1, F(3), 5, F(1, 2))
    assert complete
    for w in p | q:
        proj = project(w, FirstN(1))
        assert proj.letters == w.letters[: len(proj)]


def test_exists_decider_never_contradicts_oracle():
    rng = random.Random(909090)
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        trial = 0
        while checked < 40 and trial < 200:
            trial += 1
            ta = random_discrete_automaton(rng)
            if validate_errors(validate(ta)) or discrete_state_count(ta) > 36:
                continue
            o = oracle_check(ta, "exists", max_steps=discrete_state_count(ta), node_cap=40_000)
            if o.status == "inconclusive":
                continue
            checked += 1
            assert check_exists(ta).holds == (o.status == "holds")
    assert checked >= 40


def test_oracle_never_contradicts_deciders_on_corpus(fig1_discrete, oera_guarded):
    o = oracle_check(fig1_discrete, "weak", max_steps=discrete_state_count(fig1_discrete))
    assert (o.status == "holds") == check_opacity(fig1_discrete, "weak").holds
    o = oracle_check(oera_guarded, "weak", granularity=F(1, 2), horizon=F(3), max_steps=3)
    d = check_opacity(oera_guarded, "weak")
    assert o.status == "violated" and d.holds is False


def random_dense_automaton(rng):
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
    for _ in range(rng.randint(1, 5)):
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
        clocks=clocks, invariant=inv, edges=edges, time_domain="dense", name="rnd",
    )


def test_bounded_pipeline_never_contradicts_oracle_first_n():
    from topaq.deciders import check_bounded

    rng = random.Random(606060)
    agree = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(30):
            ta = random_dense_automaton(rng)
            if validate_errors(validate(ta)):
                continue
            n = rng.randint(0, 2)
            for mode in ("weak", "full"):
                o = oracle_check(ta, mode, FirstN(n), granularity=F(1, 3), max_steps=5, node_cap=60_000)
                d = check_bounded(ta, FirstN(n), mode)
                if o.status == "violated":
                    assert d.holds is False, (n, mode, o.witness)
                    agree += 1
                elif o.status == "holds":
                    assert d.holds is not False, (n, mode, d.witness)
    assert agree > 5  # the sweep must exercise real violations


def test_bounded_pipeline_never_contradicts_oracle_static():
    from topaq.deciders import check_bounded
    from topaq.observers import Static

    rng = random.Random(717171)
    agree = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(16):
            ta = random_dense_automaton(rng)
            if validate_errors(validate(ta)):
                continue
            tau = tuple(sorted(F(rng.randint(0, 3), rng.choice([1, 2])) for _ in range(rng.randint(1, 2))))
            for mode in ("weak", "full"):
                o = oracle_check(ta, mode, Static(tau), granularity=F(1, 4), max_steps=5, node_cap=60_000)
                d = check_bounded(ta, Static(tau), mode)
                if o.status == "violated":
                    assert d.holds is False, (tau, mode, o.witness)
                    agree += 1
                elif o.status == "holds":
                    assert d.holds is not False, (tau, mode, d.witness)
    assert agree > 3
