"""Attacker models: time-selection functions and their projections, the
first-N unfolding, the tick construction, simple-time-sequence normalization,
the switch-time unfolding, and the free unfolding for dynamic attackers."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .regions import fresh_name, TICK_LETTER
from .ta import (
    EPSILON,
    ClockConstraint,
    Edge,
    Guard,
    TimedAutomaton,
    TimedWord,
)
from .words import _frac, _ipart, render_group

DEFAULT_OBSERVATION_CAP = 8


class ObservationCapExceeded(Exception):
    def __init__(self, n: int, cap: int):
        super().__init__(f"observation bound {n} exceeds the configured cap {cap}")


@dataclass(frozen=True)
class FirstN:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("observation count must be nonnegative")


@dataclass(frozen=True)
class Static:
    times: tuple[Fraction, ...]

    def __post_init__(self):
        times = tuple(Fraction(t) for t in self.times)
        if any(t < 0 for t in times):
            raise ValueError("switch-on times must be nonnegative")
        if any(a > b for a, b in zip(times, times[1:])):
            raise ValueError("switch-on times must be nondecreasing")
        object.__setattr__(self, "times", times)


@dataclass(frozen=True)
class Dynamic:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("observation count must be nonnegative")


TimeSelection = Union[FirstN, Static, Dynamic]


def project(w: TimedWord, sel: Union[FirstN, Static]) -> TimedWord:
    """The attacker's view of `w`.

    FirstN keeps the first N letters. Static keeps, for each armed switch-on
    time, the first letter at or after it; switch-on times whose window
    closes before any letter arrives are skipped. Dynamic selections have no
    executable projection (they exist only through the free unfolding).
    """
    if isinstance(sel, FirstN):
        return w.prefix(sel.n)
    if not isinstance(sel, Static):
        raise TypeError("projection is defined for first-N and static selections only")
    tau = sel.times
    n = len(tau)
    kept = []
    ind = 0  # index of the armed switch-on time; n means exhausted
    for a, t in w:
        if ind < n and t >= tau[ind]:
            kept.append((a, t))
            ind += 1
            while ind < n and tau[ind] < t:
                ind += 1
    return TimedWord(tuple(kept))


def unfold_first_n(ta: TimedAutomaton, n: int) -> TimedAutomaton:
    """N+1 copies of `ta`; silent edges stay in-copy, observable edges
    advance the copy until the last one, where they turn silent (the attacker
    has spent the budget, the run continues unobserved). Finals and privates
    are every copy's finals and privates, so exactly the complete runs
    accept: traces(result) = first-N projections of traces(ta)."""
    if n < 0:
        raise ValueError("observation count must be nonnegative")
    cp = lambda loc, i: f"{loc}~{i}"
    locations = frozenset(cp(l, i) for l in ta.locations for i in range(n + 1))
    inv = {cp(l, i): ta.invariant_of(l) for l in ta.locations for i in range(n + 1)}
    edges = []
    for i in range(n + 1):
        for e in ta.edges:
            if e.action is EPSILON or i == n:
                edges.append(Edge(cp(e.source, i), e.guard, EPSILON, e.resets, cp(e.target, i)))
            else:
                edges.append(Edge(cp(e.source, i), e.guard, e.action, e.resets, cp(e.target, i + 1)))
    return TimedAutomaton(
        actions=ta.actions,
        locations=locations,
        init=cp(ta.init, 0),
        private=frozenset(cp(l, i) for l in ta.private for i in range(n + 1)),
        final=frozenset(cp(l, i) for l in ta.final for i in range(n + 1)),
        clocks=ta.clocks,
        invariant=inv,
        edges=tuple(edges),
        time_domain=ta.time_domain,
        name=f"{ta.name}~unfold{n}",
    )


def _nonempty_subsets(items: Sequence[str]):
    items = list(items)
    for mask in range(1, 1 << len(items)):
        yield frozenset(x for i, x in enumerate(items) if mask >> i & 1)


def _all_subsets(items: Sequence[str]):
    items = list(items)
    for mask in range(1 << len(items)):
        yield frozenset(x for i, x in enumerate(items) if mask >> i & 1)


def tick_construction(ta: TimedAutomaton, n: int, cap: int = DEFAULT_OBSERVATION_CAP) -> TimedAutomaton:
    """Dense-time gadget whose region automaton's untimed language encodes
    the first-N projected traces of `ta` as ticked words.

    On top of the N-unfolding: a global tick clock emits `t` each time unit,
    one clock per observation records its timestamp's fractional part (all
    kept below 1 by silent reset loops), and an end gadget reached from the
    unfolding's final locations emits the fractional groups as f-letters, one
    full time unit long.

    The unfolding is final-relaxed first: a run ends the moment it reaches a
    final location, so exits from finals are dead and their invariants only
    matter at entry; the relaxation is what lets the gadget spend its extra
    time units there.
    """
    from .constructions import relax_finals

    if n > cap:
        raise ObservationCapExceeded(n, cap)
    if TICK_LETTER in ta.actions:
        raise ValueError(f"alphabet already contains the tick letter {TICK_LETTER!r}")
    unfolded = relax_finals(unfold_first_n(ta, n))

    taken = set(unfolded.clocks)
    obs = []
    for i in range(n + 1):
        c = fresh_name(f"tk{i}", taken)
        obs.append(c)
        taken.add(c)
    x0, rest = obs[0], obs[1:]

    def guard_all_below_one() -> Guard:
        return Guard(tuple(ClockConstraint(c, "<", 1) for c in obs))

    def guard_group(at_one: frozenset[str], inside: Sequence[str]) -> Guard:
        conj = [ClockConstraint(c, "=", 1) for c in sorted(at_one)]
        for c in inside:
            if c not in at_one:
                conj.append(ClockConstraint(c, ">", 0))
                conj.append(ClockConstraint(c, "<", 1))
        return Guard(tuple(conj))

    below1 = guard_all_below_one()
    lg0 = fresh_name("gadget0", unfolded.locations)
    lg1 = fresh_name("gadget1", unfolded.locations)

    edges = []
    # original edges, confined to sub-unit observation clocks (the relaxed
    # unfolding has no exits from final locations)
    for e in unfolded.edges:
        resets = e.resets
        if e.action is not EPSILON:
            copy_index = int(e.target.rsplit("~", 1)[1])
            resets = resets | {obs[copy_index]}
        edges.append(Edge(e.source, e.guard.conjoin(below1), e.action, resets, e.target))
    # tick loops (not on unfolding finals) and silent observation-clock resets
    for loc in sorted(unfolded.locations):
        if loc not in unfolded.final:
            edges.append(Edge(loc, Guard.of(ClockConstraint(x0, "=", 1)), TICK_LETTER, frozenset({x0}), loc))
        for subset in _nonempty_subsets(rest):
            edges.append(Edge(loc, guard_group(subset, rest), EPSILON, subset, loc))
    # end gadget: first the group synchronized with the tick clock, then each
    # later fractional group as it reaches 1, closing after one full unit
    f_letters = set()
    index_of = {c: i for i, c in enumerate(obs)}
    for subset in _all_subsets(rest):
        group = subset | {x0}
        letter = render_group(frozenset(index_of[c] for c in group))
        f_letters.add(letter)
        for lf in sorted(unfolded.final):
            edges.append(Edge(lf, guard_group(group, obs), letter, group, lg0))
        edges.append(Edge(lg0, guard_group(group, obs), EPSILON, frozenset(), lg1))
    for subset in _nonempty_subsets(rest):
        letter = render_group(frozenset(index_of[c] for c in subset))
        f_letters.add(letter)
        edges.append(Edge(lg0, guard_group(subset, obs), letter, subset, lg0))

    inv = dict(unfolded.invariant)
    inv[lg0] = Guard.true()
    inv[lg1] = Guard.true()
    return TimedAutomaton(
        actions=unfolded.actions | {TICK_LETTER} | f_letters,
        locations=unfolded.locations | {lg0, lg1},
        init=unfolded.init,
        private=unfolded.private,
        final=frozenset({lg1}),
        clocks=unfolded.clocks | frozenset(obs),
        invariant=inv,
        edges=tuple(edges),
        time_domain="dense",
        name=f"{ta.name}~tick{n}",
    )


def normalize_sequence(tau: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Canonical simple time sequence equivalent to `tau`: integral parts are
    kept, the i-th smallest nonzero fractional part becomes i/(k+1) where k
    counts the distinct nonzero fractional parts. Idempotent, and equivalent
    inputs map to the same output."""
    tau = [Fraction(t) for t in tau]
    if any(a > b for a, b in zip(tau, tau[1:])):
        raise ValueError("time sequence must be nondecreasing")
    fracs = sorted({_frac(t) for t in tau} - {Fraction(0)})
    nf = len(fracs)
    rank = {f: i + 1 for i, f in enumerate(fracs)}
    rank[Fraction(0)] = 0
    return tuple(_ipart(t) + Fraction(rank[_frac(t)], nf + 1) for t in tau)


def scale_guard(g: Guard, factor: int) -> Guard:
    return Guard(tuple(ClockConstraint(c.clock, c.cmp, c.bound * factor) for c in g.conjuncts))


def unfold_tau(ta: TimedAutomaton, tau: Sequence[Fraction]) -> TimedAutomaton:
    """Unfolding against a simple switch-time sequence: sensor-off copies
    (everything silent) alternate with sensor-on copies, and a fresh global
    clock fires each switch-on at its sequence time. All constants are
    scaled by one plus the number of distinct nonzero fractional parts, so
    the result has integer constants and its traces are the projected traces
    at that same scale.

    Copies are indexed by switch slots, not observation counts: an armed
    sensor stays armed until a letter arrives, and the letter's timestamp
    decides through window guards how many later switch times it burns
    (the next armed slot is the first one at or after the letter). An eager
    slot-skip edge would instead race against observations landing exactly
    at a switch time and observe words the projection never produces.
    """
    tau = tuple(Fraction(t) for t in tau)
    if tuple(normalize_sequence(tau)) != tau:
        raise ValueError("switch-time sequence must be simple (use normalize_sequence)")
    n = len(tau)
    fracs = {_frac(t) for t in tau} - {Fraction(0)}
    factor = len(fracs) + 1
    scaled = [int(t * factor) for t in tau]

    z = fresh_name("zobs", ta.clocks)
    on = lambda loc, i: f"{loc}~on{i}"
    off = lambda loc, j: f"{loc}~off{j}"
    locations = set()
    inv = {}
    for l in ta.locations:
        base = scale_guard(ta.invariant_of(l), factor)
        for i in range(n):
            locations.add(on(l, i))
            inv[on(l, i)] = base
        for j in range(n + 1):
            locations.add(off(l, j))
            limit = Guard.of(ClockConstraint(z, "<=", scaled[j])) if j < n else Guard.true()
            inv[off(l, j)] = base.conjoin(limit)

    def window(k: int, j: int) -> Guard:
        # observed from slot j at time t: the next armed slot is k, i.e.
        # tau[k-1] < t (slots j+1..k-1 burned) and t <= tau[k] (slot k keeps)
        conj = []
        if k > j + 1:
            conj.append(ClockConstraint(z, ">", scaled[k - 1]))
        if k < n:
            conj.append(ClockConstraint(z, "<=", scaled[k]))
        return Guard(tuple(conj))

    edges = []
    for e in ta.edges:
        g = scale_guard(e.guard, factor)
        for j in range(n + 1):
            if e.action is EPSILON or j == n:
                gj = g
            else:
                # a letter at exactly the switch time is observed, so its
                # silenced variant must fire strictly before it
                gj = g.conjoin(Guard.of(ClockConstraint(z, "<", scaled[j])))
            edges.append(Edge(off(e.source, j), gj, EPSILON, e.resets, off(e.target, j)))
        if e.action is EPSILON:
            for i in range(n):
                edges.append(Edge(on(e.source, i), g, EPSILON, e.resets, on(e.target, i)))
        else:
            for i in range(n):
                for k in range(i + 1, n + 1):
                    edges.append(
                        Edge(on(e.source, i), g.conjoin(window(k, i)), e.action, e.resets, off(e.target, k))
                    )
    for l in ta.locations:
        for i in range(n):
            at = Guard.of(ClockConstraint(z, "=", scaled[i]))
            edges.append(Edge(off(l, i), at, EPSILON, frozenset(), on(l, i)))

    finals = set()
    for l in ta.final:
        finals.update(on(l, i) for i in range(n))
        finals.update(off(l, j) for j in range(n + 1))
    privates = {on(l, i) for l in ta.private for i in range(n)}
    privates |= {off(l, j) for l in ta.private for j in range(n + 1)}
    return TimedAutomaton(
        actions=ta.actions,
        locations=frozenset(locations),
        init=off(ta.init, 0),
        private=frozenset(privates),
        final=frozenset(finals),
        clocks=ta.clocks | {z},
        invariant=inv,
        edges=tuple(edges),
        time_domain=ta.time_domain,
        name=f"{ta.name}~tau{n}",
    )


def unfold_free(ta: TimedAutomaton, n: int) -> TimedAutomaton:
    """Unfolding for the dynamic attacker: arming the sensor becomes an
    observable o_i letter allowed at any time, so every possible choice of
    switch-on times is represented; runs carry at most 2N observable letters.
    """
    if n < 0:
        raise ValueError("observation count must be nonnegative")
    on = lambda loc, i: f"{loc}~on{i}"
    off = lambda loc, j: f"{loc}~off{j}"
    obs_letters = tuple(f"o{i}" for i in range(n))
    clash = set(obs_letters) & ta.actions
    if clash:
        raise ValueError(f"alphabet already contains arming letters {sorted(clash)}")
    locations = set()
    inv = {}
    for l in ta.locations:
        for i in range(n):
            locations.add(on(l, i))
            inv[on(l, i)] = ta.invariant_of(l)
        for j in range(n + 1):
            locations.add(off(l, j))
            inv[off(l, j)] = ta.invariant_of(l)
    edges = []
    for e in ta.edges:
        for j in range(n + 1):
            edges.append(Edge(off(e.source, j), e.guard, EPSILON, e.resets, off(e.target, j)))
        if e.action is EPSILON:
            for i in range(n):
                edges.append(Edge(on(e.source, i), e.guard, EPSILON, e.resets, on(e.target, i)))
        else:
            for i in range(n):
                edges.append(Edge(on(e.source, i), e.guard, e.action, e.resets, off(e.target, i + 1)))
    for l in ta.locations:
        for i in range(n):
            edges.append(Edge(off(l, i), Guard.true(), obs_letters[i], frozenset(), on(l, i)))
        for i in range(n - 1):
            edges.append(Edge(on(l, i), Guard.true(), obs_letters[i], frozenset(), on(l, i + 1)))
    finals = set()
    for l in ta.final:
        finals.update(on(l, i) for i in range(n))
        finals.update(off(l, j) for j in range(n + 1))
    privates = {on(l, i) for l in ta.private for i in range(n)}
    privates |= {off(l, j) for l in ta.private for j in range(n + 1)}
    return TimedAutomaton(
        actions=ta.actions | set(obs_letters),
        locations=frozenset(locations),
        init=off(ta.init, 0),
        private=frozenset(privates),
        final=frozenset(finals),
        clocks=ta.clocks,
        invariant=inv,
        edges=tuple(edges),
        time_domain=ta.time_domain,
        name=f"{ta.name}~free{n}",
    )
