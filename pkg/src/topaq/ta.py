"""Timed-automaton data model and concrete operational semantics.

Clocks are exact rationals (fractions.Fraction); no floats anywhere, so
region-boundary comparisons are always exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

EPSILON = None  # unobservable action on an edge

CMP_OPS = ("<", "<=", "=", ">=", ">")


class StepError(Exception):
    """A delay+discrete step is not enabled; message names the failing constraint."""


class BoundExhausted(Exception):
    """Run enumeration hit its node cap before covering the requested bounds."""


@dataclass(frozen=True)
class ClockConstraint:
    """A single inequality `clock cmp bound` with an integer bound."""

    clock: str
    cmp: str
    bound: int

    def __post_init__(self):
        if self.cmp not in CMP_OPS:
            raise ValueError(f"bad comparison operator {self.cmp!r}")

    def holds(self, value: Fraction) -> bool:
        if self.cmp == "<":
            return value < self.bound
        if self.cmp == "<=":
            return value <= self.bound
        if self.cmp == "=":
            return value == self.bound
        if self.cmp == ">=":
            return value >= self.bound
        return value > self.bound

    def __str__(self):
        return f"{self.clock} {self.cmp} {self.bound}"


@dataclass(frozen=True)
class Guard:
    """Conjunction of clock constraints; the empty conjunction is `true`."""

    conjuncts: tuple[ClockConstraint, ...] = ()

    @staticmethod
    def true() -> "Guard":
        return Guard(())

    @staticmethod
    def of(*constraints: ClockConstraint) -> "Guard":
        return Guard(tuple(constraints))

    def holds(self, valuation: Mapping[str, Fraction]) -> bool:
        return all(c.holds(valuation[c.clock]) for c in self.conjuncts)

    def failing(self, valuation: Mapping[str, Fraction]) -> Optional[ClockConstraint]:
        for c in self.conjuncts:
            if not c.holds(valuation[c.clock]):
                return c
        return None

    def clocks(self) -> frozenset[str]:
        return frozenset(c.clock for c in self.conjuncts)

    def conjoin(self, other: "Guard") -> "Guard":
        return Guard(self.conjuncts + other.conjuncts)

    def __str__(self):
        if not self.conjuncts:
            return "true"
        return " && ".join(str(c) for c in self.conjuncts)


@dataclass(frozen=True)
class Edge:
    source: str
    guard: Guard
    action: Optional[str]  # EPSILON (None) for unobservable
    resets: frozenset[str]
    target: str

    def __str__(self):
        act = self.action if self.action is not None else "eps"
        rst = ",".join(sorted(self.resets))
        parts = [f"{self.source} -> {self.target}", f"act {act}"]
        if self.guard.conjuncts:
            parts.append(f"when {self.guard}")
        if rst:
            parts.append(f"reset {rst}")
        return "; ".join(parts)


def edge(source, target, action=EPSILON, guard=Guard.true(), resets=()) -> Edge:
    """Convenience constructor used heavily by constructions and tests."""
    return Edge(source, guard, action, frozenset(resets), target)


@dataclass(frozen=True, eq=False)
class TimedAutomaton:
    """A timed automaton with private and final location sets.

    Runs end at the *first* final location reached; this matters for every
    language-level construction in this package.
    """

    actions: frozenset[str]
    locations: frozenset[str]
    init: str
    private: frozenset[str]
    final: frozenset[str]
    clocks: frozenset[str]
    invariant: Mapping[str, Guard]
    edges: tuple[Edge, ...]
    time_domain: str = "dense"  # "dense" | "discrete"
    name: str = "ta"

    def __post_init__(self):
        if self.time_domain not in ("dense", "discrete"):
            raise ValueError(f"bad time domain {self.time_domain!r}")

    def invariant_of(self, location: str) -> Guard:
        return self.invariant.get(location, Guard.true())

    def edges_from(self, location: str) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.source == location)

    def max_constants(self) -> dict[str, int]:
        """M(x): the greatest constant x is compared against; 0 if unused.

        Negative bounds are clamped to 0 so M(x) is always a natural number.
        """
        m = {x: 0 for x in self.clocks}
        constraints: list[ClockConstraint] = []
        for g in self.invariant.values():
            constraints.extend(g.conjuncts)
        for e in self.edges:
            constraints.extend(e.guard.conjuncts)
        for c in constraints:
            if c.clock in m:
                m[c.clock] = max(m[c.clock], c.bound)
        return m

    def zero_valuation(self) -> dict[str, Fraction]:
        return {x: Fraction(0) for x in self.clocks}

    def initial_configuration(self) -> "Configuration":
        return Configuration(self.init, self.zero_valuation())

    def has_epsilon_edges(self) -> bool:
        return any(e.action is EPSILON for e in self.edges)


def make_ta(
    *,
    actions: Iterable[str],
    locations: Iterable[str],
    init: str,
    final: Iterable[str],
    edges: Iterable[Edge],
    private: Iterable[str] = (),
    clocks: Iterable[str] = (),
    invariant: Optional[Mapping[str, Guard]] = None,
    time_domain: str = "dense",
    name: str = "ta",
) -> TimedAutomaton:
    locations = frozenset(locations)
    inv = {loc: Guard.true() for loc in locations}
    if invariant:
        inv.update(invariant)
    return TimedAutomaton(
        actions=frozenset(actions),
        locations=locations,
        init=init,
        private=frozenset(private),
        final=frozenset(final),
        clocks=frozenset(clocks),
        invariant=inv,
        edges=tuple(edges),
        time_domain=time_domain,
        name=name,
    )


@dataclass(frozen=True)
class Configuration:
    location: str
    valuation: Mapping[str, Fraction]

    def __post_init__(self):
        object.__setattr__(self, "valuation", dict(self.valuation))

    def key(self):
        return (self.location, tuple(sorted(self.valuation.items())))

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True)
class TimedWord:
    """Observable letters with nondecreasing rational timestamps."""

    letters: tuple[tuple[str, Fraction], ...] = ()

    def __post_init__(self):
        stamps = [t for _, t in self.letters]
        if any(t < 0 for t in stamps):
            raise ValueError("negative timestamp")
        if any(a > b for a, b in zip(stamps, stamps[1:])):
            raise ValueError("timestamps must be nondecreasing")

    @staticmethod
    def of(*pairs) -> "TimedWord":
        return TimedWord(tuple((a, Fraction(t)) for a, t in pairs))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def untimed(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.letters)

    def timestamps(self) -> tuple[Fraction, ...]:
        return tuple(t for _, t in self.letters)

    def prefix(self, n: int) -> "TimedWord":
        return TimedWord(self.letters[:n])

    def append(self, letter: str, stamp: Fraction) -> "TimedWord":
        return TimedWord(self.letters + ((letter, Fraction(stamp)),))

    def scaled(self, factor: Fraction) -> "TimedWord":
        return TimedWord(tuple((a, t * factor) for a, t in self.letters))

    def sort_key(self):
        return (len(self.letters), self.untimed(), self.timestamps())

    def __str__(self):
        if not self.letters:
            return "ε"
        return " ".join(f"({a}, {t})" for a, t in self.letters)


@dataclass(frozen=True)
class Run:
    """Alternating configurations and (delay, edge) steps, ending at the
    first final location."""

    initial: Configuration
    steps: tuple[tuple[Fraction, Edge, Configuration], ...] = ()

    @property
    def last(self) -> Configuration:
        return self.steps[-1][2] if self.steps else self.initial

    def configurations(self) -> list[Configuration]:
        return [self.initial] + [cfg for _, _, cfg in self.steps]

    def duration(self) -> Fraction:
        return sum((d for d, _, _ in self.steps), Fraction(0))

    def visits(self, locations: frozenset[str]) -> bool:
        return any(c.location in locations for c in self.configurations())


@dataclass(frozen=True)
class EnumerationResult:
    """Runs found within the bounds; `complete` is False when a node cap cut
    the search short (a bound-exhausted result, distinct from `no runs`)."""

    runs: tuple[Run, ...]
    complete: bool
    explored: int


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str

    def __str__(self):
        return f"{self.severity}: {self.message}"


def validate(ta: TimedAutomaton) -> list[Diagnostic]:
    """Well-formedness check; empty list iff every structural invariant holds."""
    out: list[Diagnostic] = []
    err = lambda m: out.append(Diagnostic("error", m))
    warn = lambda m: out.append(Diagnostic("warning", m))

    if ta.init not in ta.locations:
        err(f"initial location {ta.init!r} not in the location set")
    for loc in sorted(ta.private - ta.locations):
        err(f"private location {loc!r} not in the location set")
    for loc in sorted(ta.final - ta.locations):
        err(f"final location {loc!r} not in the location set")
    for loc in sorted(ta.locations):
        if loc not in ta.invariant:
            err(f"invariant missing for location {loc!r}")
    for loc in sorted(set(ta.invariant) - ta.locations):
        err(f"invariant given for unknown location {loc!r}")
    for loc, g in sorted(ta.invariant.items()):
        for c in g.conjuncts:
            if c.clock not in ta.clocks:
                err(f"invariant of {loc!r} uses unknown clock {c.clock!r}")
    for i, e in enumerate(ta.edges):
        where = f"edge #{i} ({e.source} -> {e.target})"
        if e.source not in ta.locations:
            err(f"{where}: source not in the location set")
        if e.target not in ta.locations:
            err(f"{where}: target not in the location set")
        for x in sorted(e.resets - ta.clocks):
            err(f"{where}: resets unknown clock {x!r}")
        for c in e.guard.conjuncts:
            if c.clock not in ta.clocks:
                err(f"{where}: guard uses unknown clock {c.clock!r}")
        if e.action is not EPSILON and e.action not in ta.actions:
            err(f"{where}: action {e.action!r} not in the alphabet")

    # Clocks are nonnegative, so negative bounds make a constraint vacuous or
    # unsatisfiable depending on the operator; flag both as warnings.
    all_constraints = [(f"invariant of {loc!r}", c) for loc, g in sorted(ta.invariant.items()) for c in g.conjuncts]
    all_constraints += [(f"guard of edge #{i}", c) for i, e in enumerate(ta.edges) for c in e.guard.conjuncts]
    for where, c in all_constraints:
        if c.bound < 0:
            kind = "vacuous" if c.cmp in (">", ">=") else "unsatisfiable"
            warn(f"{where}: {c} is {kind} (clocks are nonnegative)")

    if not validate_errors(out) and not ta.invariant_of(ta.init).holds(ta.zero_valuation()):
        warn("initial configuration violates the initial location's invariant; the language is empty")
    return out


def validate_errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]


def step(ta: TimedAutomaton, cfg: Configuration, delay: Fraction, e: Edge) -> Configuration:
    """One combined delay+discrete step.

    Invariant satisfaction over the delay is checked at the endpoints only,
    which is sound because constraint sets are convex.
    """
    delay = Fraction(delay)
    if delay < 0:
        raise StepError("negative delay")
    if e.source != cfg.location:
        raise StepError(f"edge source {e.source!r} does not match location {cfg.location!r}")
    inv = ta.invariant_of(cfg.location)
    if not inv.holds(cfg.valuation):
        raise StepError(f"invariant violated during delay: {inv.failing(cfg.valuation)}")
    delayed = {x: v + delay for x, v in cfg.valuation.items()}
    bad = inv.failing(delayed)
    if bad is not None:
        raise StepError(f"invariant violated during delay: {bad}")
    bad = e.guard.failing(delayed)
    if bad is not None:
        raise StepError(f"guard unsatisfied: {bad}")
    after = {x: (Fraction(0) if x in e.resets else v) for x, v in delayed.items()}
    bad = ta.invariant_of(e.target).failing(after)
    if bad is not None:
        raise StepError(f"target invariant violated: {bad}")
    return Configuration(e.target, after)


def enumerate_runs(
    ta: TimedAutomaton,
    horizon: Fraction,
    max_steps: int,
    granularity: Fraction,
    node_cap: int = 2_000_000,
    dedup: bool = False,
) -> EnumerationResult:
    """All runs whose delays are multiples of `granularity`, with total
    duration <= horizon and <= max_steps transitions, in deterministic
    (depth-first, delays ascending, edges in declaration order) order.

    With dedup=True, branches that revisit an already-expanded search node
    (configuration, private flag, elapsed time, trace, remaining budget no
    better than before) are cut; the returned runs then form a representative
    subset that preserves trace sets and their private/public classification.
    """
    horizon = Fraction(horizon)
    granularity = Fraction(granularity)
    if granularity <= 0:
        raise ValueError("granularity must be positive")
    if ta.time_domain == "discrete" and granularity != 1:
        raise ValueError("discrete time requires granularity 1")

    init = ta.initial_configuration()
    if not ta.invariant_of(init.location).holds(init.valuation):
        return EnumerationResult((), True, 0)

    runs: list[Run] = []
    explored = 0
    complete = True
    # dedup key -> best (fewest-steps-used) visit seen so far
    seen: dict[tuple, int] = {}

    edges_by_source: dict[str, list[Edge]] = {}
    for e in ta.edges:
        edges_by_source.setdefault(e.source, []).append(e)

    def visit(cfg, elapsed, steps_used, prefix, trace, is_private):
        nonlocal explored, complete
        if cfg.location in ta.final:
            runs.append(Run(init, tuple(prefix)))
            return
        if steps_used >= max_steps:
            return
        if dedup:
            key = (cfg.key(), is_private, elapsed, trace)
            best = seen.get(key)
            if best is not None and best <= steps_used:
                return
            seen[key] = steps_used
        budget = horizon - elapsed
        k = 0
        while k * granularity <= budget:
            d = k * granularity
            for e in edges_by_source.get(cfg.location, ()):
                if explored >= node_cap:
                    complete = False
                    return
                explored += 1
                try:
                    nxt = step(ta, cfg, d, e)
                except StepError:
                    continue
                ntrace = trace if e.action is EPSILON else trace + ((e.action, elapsed + d),)
                visit(
                    nxt,
                    elapsed + d,
                    steps_used + 1,
                    prefix + [(d, e, nxt)],
                    ntrace,
                    is_private or nxt.location in ta.private,
                )
                if not complete:
                    return
            k += 1

    visit(init, Fraction(0), 0, [], (), init.location in ta.private)
    return EnumerationResult(tuple(runs), complete, explored)


def trace_of(run: Run) -> TimedWord:
    """The timed word of a run: observable letters at their absolute times."""
    letters = []
    elapsed = Fraction(0)
    for d, e, _ in run.steps:
        elapsed += d
        if e.action is not EPSILON:
            letters.append((e.action, elapsed))
    return TimedWord(tuple(letters))


def is_private_run(ta: TimedAutomaton, run: Run) -> bool:
    return run.visits(ta.private)
