"""Structural transformations of timed automata: public/private/memo
automata, the synchronized product, and the opacity inter-reduction gadgets.

All derived location names carry provenance tags so counterexamples stay
readable. Every construction respects the run semantics (runs end at the
first final location); the product in particular prunes exits from final
locations and transfers final invariants onto incoming edges first, since a
factor's run ends, and stops constraining time, the moment it accepts.
"""

from __future__ import annotations

import warnings
from fractions import Fraction

from .regions import fresh_name
from .ta import (
    EPSILON,
    ClockConstraint,
    Edge,
    Guard,
    TimedAutomaton,
)

S_TAG = "~S"       # already visited the private set
NS_TAG = "~nS"     # not yet visited


def prune_final_exits(ta: TimedAutomaton) -> TimedAutomaton:
    """Drop edges leaving final locations: runs end at the first final
    location, so these edges are dead. Constructions that re-map the final
    set (the private-runs copy in particular) rely on this normalization,
    since a location that stops being final would otherwise let runs continue
    where the original automaton ended them."""
    edges = tuple(e for e in ta.edges if e.source not in ta.final)
    if len(edges) == len(ta.edges):
        return ta
    return TimedAutomaton(
        actions=ta.actions,
        locations=ta.locations,
        init=ta.init,
        private=ta.private,
        final=ta.final,
        clocks=ta.clocks,
        invariant=ta.invariant,
        edges=edges,
        time_domain=ta.time_domain,
        name=ta.name,
    )


def build_pub(ta: TimedAutomaton) -> TimedAutomaton:
    """Automaton of the public runs: private locations removed outright."""
    if ta.init in ta.private:
        warnings.warn("initial location is private: the public-run language is empty")
        sink = fresh_name("pub_sink", ta.locations)
        return TimedAutomaton(
            actions=ta.actions,
            locations=frozenset({sink}),
            init=sink,
            private=frozenset(),
            final=frozenset(),
            clocks=ta.clocks,
            invariant={sink: Guard.true()},
            edges=(),
            time_domain=ta.time_domain,
            name=f"{ta.name}_pub",
        )
    keep = ta.locations - ta.private
    edges = tuple(e for e in ta.edges if e.source in keep and e.target in keep)
    return TimedAutomaton(
        actions=ta.actions,
        locations=keep,
        init=ta.init,
        private=frozenset(),
        final=ta.final - ta.private,
        clocks=ta.clocks,
        invariant={loc: ta.invariant_of(loc) for loc in keep},
        edges=edges,
        time_domain=ta.time_domain,
        name=f"{ta.name}_pub",
    )


def build_priv(ta: TimedAutomaton) -> TimedAutomaton:
    """Automaton of the private runs: two copies of the location set keyed on
    whether the private set was already visited, with entries into private
    locations redirected from the not-yet copy to the visited copy.

    A private initial location starts directly in the visited copy (every run
    is private then); otherwise the not-yet copy's initial is used.
    """
    ta = prune_final_exits(ta)
    s = lambda loc: loc + S_TAG
    ns = lambda loc: loc + NS_TAG
    locations = frozenset(s(l) for l in ta.locations) | frozenset(ns(l) for l in ta.locations)
    inv = {s(l): ta.invariant_of(l) for l in ta.locations}
    inv.update({ns(l): ta.invariant_of(l) for l in ta.locations})
    edges = []
    for e in ta.edges:
        edges.append(Edge(s(e.source), e.guard, e.action, e.resets, s(e.target)))
    for e in ta.edges:
        if e.target not in ta.private:
            edges.append(Edge(ns(e.source), e.guard, e.action, e.resets, ns(e.target)))
    for e in ta.edges:
        if e.target in ta.private:
            edges.append(Edge(ns(e.source), e.guard, e.action, e.resets, s(e.target)))
    return TimedAutomaton(
        actions=ta.actions,
        locations=locations,
        init=s(ta.init) if ta.init in ta.private else ns(ta.init),
        private=frozenset(s(l) for l in ta.private),
        final=frozenset(s(l) for l in ta.final),
        clocks=ta.clocks,
        invariant=inv,
        edges=tuple(edges),
        time_domain=ta.time_domain,
        name=f"{ta.name}_priv",
    )


def build_memo(ta: TimedAutomaton) -> TimedAutomaton:
    """Same language as `ta`, with the visited-private bit stored in the
    location: the private-runs automaton with the not-yet finals restored."""
    pv = build_priv(ta)
    return TimedAutomaton(
        actions=pv.actions,
        locations=pv.locations,
        init=pv.init,
        private=pv.private,
        final=pv.final | frozenset(l + NS_TAG for l in ta.final),
        clocks=pv.clocks,
        invariant=pv.invariant,
        edges=pv.edges,
        time_domain=pv.time_domain,
        name=f"{ta.name}_memo",
    )


def relax_finals(ta: TimedAutomaton) -> TimedAutomaton:
    """Normalize for language-level composition under run semantics.

    Exits from final locations are dead (runs stop there) and are dropped.
    Final-location invariants only matter at entry, so they move onto every
    incoming edge (with reset clocks substituted by zero) and the final
    locations themselves become invariant-free.
    """
    edges = []
    for e in ta.edges:
        if e.source in ta.final:
            continue
        if e.target in ta.final:
            conj = []
            dead = False
            for c in ta.invariant_of(e.target).conjuncts:
                if c.clock in e.resets:
                    if not c.holds(Fraction(0)):
                        dead = True
                        break
                else:
                    conj.append(c)
            if dead:
                continue
            e = Edge(e.source, e.guard.conjoin(Guard(tuple(conj))), e.action, e.resets, e.target)
        edges.append(e)
    inv = {loc: (Guard.true() if loc in ta.final else g) for loc, g in ta.invariant.items()}
    finals = ta.final
    if ta.init in ta.final and not ta.invariant_of(ta.init).holds(ta.zero_valuation()):
        # the zero-step run was never admissible, so nothing is accepted
        finals = frozenset()
        edges = []
    return TimedAutomaton(
        actions=ta.actions,
        locations=ta.locations,
        init=ta.init,
        private=ta.private,
        final=finals,
        clocks=ta.clocks,
        invariant=inv,
        edges=tuple(edges),
        time_domain=ta.time_domain,
        name=ta.name,
    )


def rename_clocks(ta: TimedAutomaton, mapping: dict[str, str]) -> TimedAutomaton:
    remap = lambda g: Guard(tuple(ClockConstraint(mapping[c.clock], c.cmp, c.bound) for c in g.conjuncts))
    return TimedAutomaton(
        actions=ta.actions,
        locations=ta.locations,
        init=ta.init,
        private=ta.private,
        final=ta.final,
        clocks=frozenset(mapping[x] for x in ta.clocks),
        invariant={loc: remap(g) for loc, g in ta.invariant.items()},
        edges=tuple(
            Edge(e.source, remap(e.guard), e.action, frozenset(mapping[x] for x in e.resets), e.target)
            for e in ta.edges
        ),
        time_domain=ta.time_domain,
        name=ta.name,
    )


def product(ta1: TimedAutomaton, ta2: TimedAutomaton) -> TimedAutomaton:
    """Synchronized product recognizing the intersection of the two trace
    languages: shared letters synchronize (guards conjoined, resets unioned),
    silent edges interleave, invariants conjoin, finals pair up.

    The clocks of `ta2` are renamed fresh first, and both factors are
    final-relaxed so a factor that has already accepted can idle."""
    if ta1.time_domain != ta2.time_domain:
        raise ValueError("product factors must share a time domain")
    taken = set(ta1.clocks) | set(ta2.clocks)
    mapping = {}
    for x in sorted(ta2.clocks):
        nx = fresh_name(x + "'", taken)
        mapping[x] = nx
        taken.add(nx)
    a = relax_finals(ta1)
    b = relax_finals(rename_clocks(ta2, mapping))

    shared = a.actions & b.actions
    name = lambda l1, l2: f"({l1}|{l2})"
    locations = set()
    inv = {}
    for l1 in a.locations:
        for l2 in b.locations:
            loc = name(l1, l2)
            locations.add(loc)
            inv[loc] = a.invariant_of(l1).conjoin(b.invariant_of(l2))
    edges = []
    for e1 in a.edges:
        if e1.action is EPSILON:
            for l2 in sorted(b.locations):
                edges.append(Edge(name(e1.source, l2), e1.guard, EPSILON, e1.resets, name(e1.target, l2)))
    for e2 in b.edges:
        if e2.action is EPSILON:
            for l1 in sorted(a.locations):
                edges.append(Edge(name(l1, e2.source), e2.guard, EPSILON, e2.resets, name(l1, e2.target)))
    for e1 in a.edges:
        if e1.action in shared:
            for e2 in b.edges:
                if e2.action == e1.action:
                    edges.append(
                        Edge(
                            name(e1.source, e2.source),
                            e1.guard.conjoin(e2.guard),
                            e1.action,
                            e1.resets | e2.resets,
                            name(e1.target, e2.target),
                        )
                    )
    return TimedAutomaton(
        actions=a.actions | b.actions,
        locations=frozenset(locations),
        init=name(a.init, b.init),
        private=frozenset(),
        final=frozenset(name(l1, l2) for l1 in a.final for l2 in b.final),
        clocks=a.clocks | b.clocks,
        invariant=inv,
        edges=tuple(edges),
        time_domain=ta1.time_domain,
        name=f"({ta1.name}x{ta2.name})",
    )


def _merge_parts(part1: TimedAutomaton, part2: TimedAutomaton):
    """Disjoint union of two part automata (shared clocks allowed)."""
    overlap = part1.locations & part2.locations
    if overlap:
        raise ValueError(f"gadget parts share locations: {sorted(overlap)[:3]}")
    inv = dict(part1.invariant)
    inv.update(part2.invariant)
    return (
        part1.locations | part2.locations,
        inv,
        part1.edges + part2.edges,
        part1.final | part2.final,
        part1.clocks | part2.clocks,
        part1.actions | part2.actions,
    )


def _urgency_clock(clocks: frozenset[str]) -> tuple[str, frozenset[str]]:
    if clocks:
        return sorted(clocks)[0], clocks
    u = "u"
    return u, frozenset({u})


def swap_gadget(ta: TimedAutomaton) -> TimedAutomaton:
    """A TA whose private and public trace sets are those of `ta` swapped.

    Two urgent entry locations (invariant x = 0) feed the private-runs part
    (publicly) and the public-runs part (through the one private location),
    so full opacity of `ta` equals weak opacity of `ta` and of this gadget.
    """
    pub = build_pub(ta)
    priv = build_priv(ta)
    locations, inv, edges, finals, clocks, actions = _merge_parts(priv, pub)
    x, clocks = _urgency_clock(clocks)
    init, lpriv = fresh_name("init'", locations), fresh_name("priv'", locations)
    urgent = Guard.of(ClockConstraint(x, "=", 0))
    inv = dict(inv)
    inv[init] = urgent
    inv[lpriv] = urgent
    new_edges = (
        Edge(init, Guard.true(), EPSILON, frozenset(), priv.init),
        Edge(init, Guard.true(), EPSILON, frozenset(), lpriv),
        Edge(lpriv, Guard.true(), EPSILON, frozenset(), pub.init),
    )
    return TimedAutomaton(
        actions=actions,
        locations=locations | {init, lpriv},
        init=init,
        private=frozenset({lpriv}),
        final=finals,
        clocks=clocks,
        invariant=inv,
        edges=new_edges + edges,
        time_domain=ta.time_domain,
        name=f"{ta.name}_swap",
    )


def embed_gadget(ta: TimedAutomaton) -> TimedAutomaton:
    """A TA that is fully opaque iff `ta` is weakly opaque: its public traces
    are ta's public ones, its private traces the union of both sets."""
    pub = build_pub(ta)
    priv = build_priv(ta)
    locations, inv, edges, finals, clocks, actions = _merge_parts(priv, pub)
    x, clocks = _urgency_clock(clocks)
    init, lpriv = fresh_name("init'", locations), fresh_name("priv'", locations)
    urgent = Guard.of(ClockConstraint(x, "=", 0))
    inv = dict(inv)
    inv[init] = urgent
    inv[lpriv] = urgent
    new_edges = (
        Edge(init, Guard.true(), EPSILON, frozenset(), pub.init),
        Edge(init, Guard.true(), EPSILON, frozenset(), lpriv),
        Edge(lpriv, Guard.true(), EPSILON, frozenset(), priv.init),
        Edge(lpriv, Guard.true(), EPSILON, frozenset(), pub.init),
    )
    return TimedAutomaton(
        actions=actions,
        locations=locations | {init, lpriv},
        init=init,
        private=frozenset({lpriv}),
        final=finals,
        clocks=clocks,
        invariant=inv,
        edges=new_edges + edges,
        time_domain=ta.time_domain,
        name=f"{ta.name}_embed",
    )


def retag(ta: TimedAutomaton, suffix: str) -> TimedAutomaton:
    ren = lambda l: l + suffix
    return TimedAutomaton(
        actions=ta.actions,
        locations=frozenset(ren(l) for l in ta.locations),
        init=ren(ta.init),
        private=frozenset(ren(l) for l in ta.private),
        final=frozenset(ren(l) for l in ta.final),
        clocks=ta.clocks,
        invariant={ren(l): g for l, g in ta.invariant.items()},
        edges=tuple(Edge(ren(e.source), e.guard, e.action, e.resets, ren(e.target)) for e in ta.edges),
        time_domain=ta.time_domain,
        name=ta.name,
    )


def inclusion_gadget(a: TimedAutomaton, b: TimedAutomaton) -> TimedAutomaton:
    """A TA that is weakly opaque iff traces(a) ⊆ traces(b): `a` is reachable
    only through the single private location, `b` only publicly."""
    if a.time_domain != b.time_domain:
        raise ValueError("gadget parts must share a time domain")
    pa = retag(strip_private(a), "~A")
    pb = retag(strip_private(b), "~B")
    locations, inv, edges, finals, clocks, actions = _merge_parts(pa, pb)
    x, clocks = _urgency_clock(clocks)
    init, lpriv = fresh_name("init'", locations), fresh_name("priv'", locations)
    zero = Guard.of(ClockConstraint(x, "=", 0))
    inv = dict(inv)
    inv[init] = Guard.true()
    inv[lpriv] = Guard.true()
    new_edges = (
        Edge(init, zero, EPSILON, frozenset(), lpriv),
        Edge(init, zero, EPSILON, frozenset(), pb.init),
        Edge(lpriv, zero, EPSILON, frozenset(), pa.init),
    )
    return TimedAutomaton(
        actions=actions,
        locations=locations | {init, lpriv},
        init=init,
        private=frozenset({lpriv}),
        final=finals,
        clocks=clocks,
        invariant=inv,
        edges=new_edges + edges,
        time_domain=a.time_domain,
        name=f"incl({a.name},{b.name})",
    )


def strip_private(ta: TimedAutomaton) -> TimedAutomaton:
    return TimedAutomaton(
        actions=ta.actions,
        locations=ta.locations,
        init=ta.init,
        private=frozenset(),
        final=ta.final,
        clocks=ta.clocks,
        invariant=ta.invariant,
        edges=ta.edges,
        time_domain=ta.time_domain,
        name=ta.name,
    )
