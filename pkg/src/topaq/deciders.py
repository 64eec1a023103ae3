"""Opacity decision procedures: the general existence check, the
discrete-time and observable-event-recording engines for weak/full opacity,
the bounded-attacker pipeline, and the matrix-based witness verifier."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import nfa as nfalib
from .constructions import S_TAG, build_memo, build_priv, build_pub
from .nfa import NFA, check_inclusion, from_region_automaton
from .observers import (
    DEFAULT_OBSERVATION_CAP,
    Dynamic,
    FirstN,
    ObservationCapExceeded,
    Static,
    TimeSelection,
    normalize_sequence,
    tick_construction,
    unfold_free,
    unfold_tau,
)
from .regions import (
    RegionAutomaton,
    TICK_LETTER,
    build_region_automaton,
    clock_region_of,
    concretize_region_path,
    force_integer_actions,
    tick_decode,
)
from .ta import EPSILON, TimedAutomaton, TimedWord
from .words import class_recognizer, parse_group


class UndecidableClass(Exception):
    """No sound engine applies to this automaton class."""


@dataclass(frozen=True)
class OpacityVerdict:
    """holds=True/False for a definitive answer; None when a bounded search
    found no violation but cannot conclude (oracle engine on dense time)."""

    holds: Optional[bool]
    witness: Optional[TimedWord] = None
    side: Optional[str] = None  # "priv-not-pub" | "pub-not-priv" | "intersection"
    note: str = ""

    @property
    def violated(self) -> bool:
        return self.holds is False


def is_oera(ta: TimedAutomaton) -> bool:
    """Observable event-recording automaton: one clock per letter, every
    a-edge resets exactly a's clock, silent edges reset nothing."""
    if len(ta.clocks) != len(ta.actions):
        return False
    assigned: dict[str, str] = {}
    for e in ta.edges:
        if e.action is EPSILON:
            if e.resets:
                return False
            continue
        if len(e.resets) != 1:
            return False
        (clock,) = e.resets
        if assigned.setdefault(e.action, clock) != clock:
            return False
    if len(set(assigned.values())) != len(assigned):
        return False
    # letters without edges pair up with the leftover clocks
    return len(ta.actions - set(assigned)) == len(ta.clocks - set(assigned.values()))


def check_exists(ta: TimedAutomaton, cap: Optional[int] = None) -> OpacityVerdict:
    """Existential opacity: some trace produced by both a private and a
    public run, decided as final-region reachability in the product of the
    private-runs and public-runs automata."""
    from .constructions import product

    prod = product(build_priv(ta), build_pub(ta))
    ra = build_region_automaton(prod, cap)
    path = _shortest_accepting_path(ra)
    if path is None:
        return OpacityVerdict(False, note="no trace is produced by both a private and a public run")
    _, word = concretize_region_path(prod, path)
    return OpacityVerdict(True, witness=word, side="intersection")


def _shortest_accepting_path(ra: RegionAutomaton):
    if ra.initial is None:
        return None
    parent = {ra.initial: None}
    queue = deque([ra.initial])
    goal = None
    while queue:
        r = queue.popleft()
        if r in ra.finals:
            goal = r
            break
        for e in ra.out_edges(r):
            if e.target not in parent:
                parent[e.target] = (r, e)
                queue.append(e.target)
    if goal is None:
        return None
    path = []
    cur = goal
    while parent[cur] is not None:
        prev, e = parent[cur]
        path.append(e)
        cur = prev
    return list(reversed(path))


def check_opacity(
    ta: TimedAutomaton,
    mode: str,
    engine: str = "auto",
    cap: Optional[int] = None,
    horizon: Optional[Fraction] = None,
    max_steps: Optional[int] = None,
    granularity: Optional[Fraction] = None,
) -> OpacityVerdict:
    """Weak or full opacity on the decidable classes.

    engine=auto picks the discrete-time engine, then the observable
    event-recording engine, and otherwise refuses: weak and full opacity are
    undecidable for general dense-time TAs (already with one clock plus
    silent transitions, or two clocks, or a single action). engine=oracle
    runs the bounded enumerative search instead and may be inconclusive.
    """
    if mode not in ("weak", "full"):
        raise ValueError("mode must be 'weak' or 'full'")
    if engine == "auto":
        if ta.time_domain == "discrete":
            engine = "discrete"
        elif is_oera(ta):
            engine = "oera"
        elif len(ta.clocks) == 1 and not ta.has_epsilon_edges():
            raise UndecidableClass(
                "weak/full opacity for one-clock automata without silent edges is decidable "
                "but not primitive recursive; no exact engine is implemented, use the bounded "
                "oracle engine for a semi-decision"
            )
        else:
            raise UndecidableClass(
                "weak/full opacity is undecidable for general dense-time timed automata "
                "(already for one-clock automata with silent transitions, and from two "
                "clocks or one action onward); use a discrete-time model, an observable "
                "event-recording automaton, or the bounded oracle engine"
            )
    if engine == "oracle":
        from .oracle import oracle_check

        res = oracle_check(ta, mode, None, horizon=horizon, max_steps=max_steps, granularity=granularity)
        return res.as_opacity_verdict()
    if engine == "discrete":
        if ta.time_domain != "discrete":
            raise UndecidableClass("the discrete engine requires a discrete-time automaton")
        return _check_discrete(ta, mode, cap)
    if engine == "oera":
        if not is_oera(ta):
            raise UndecidableClass("the event-recording engine requires an observable ERA")
        return _check_oera(ta, mode, cap)
    raise ValueError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------------------
# Discrete-time engine


def _ticked_language(ta: TimedAutomaton, cap: Optional[int]) -> NFA:
    from .regions import augment_ticks

    ra = build_region_automaton(augment_ticks(ta), cap)
    # ticks after the last action only encode the time to reach the final
    # location, which the trace does not record: quotient them away
    return nfalib.strip_trailing_letter(from_region_automaton(ra), TICK_LETTER)


def _check_discrete(ta: TimedAutomaton, mode: str, cap: Optional[int]) -> OpacityVerdict:
    priv = _ticked_language(build_priv(ta), cap)
    pub = _ticked_language(build_pub(ta), cap)
    alphabet = nfalib.merge_alphabets(priv, pub)
    inc = check_inclusion(priv, pub, alphabet)
    if not inc.holds:
        return OpacityVerdict(False, witness=tick_decode(inc.counterexample), side="priv-not-pub")
    if mode == "weak":
        return OpacityVerdict(True)
    inc = check_inclusion(pub, priv, alphabet)
    if not inc.holds:
        return OpacityVerdict(False, witness=tick_decode(inc.counterexample), side="pub-not-priv")
    return OpacityVerdict(True)


def language_inclusion_discrete(a: TimedAutomaton, b: TimedAutomaton, cap: Optional[int] = None):
    """Trace-language inclusion of two discrete-time TAs via their ticked
    region automata; returns (holds, counterexample timed word or None)."""
    na = _ticked_language(a, cap)
    nb = _ticked_language(b, cap)
    inc = check_inclusion(na, nb, nfalib.merge_alphabets(na, nb))
    return inc.holds, None if inc.holds else tick_decode(inc.counterexample)


# ---------------------------------------------------------------------------
# Observable event-recording engine


def _check_oera(ta: TimedAutomaton, mode: str, cap: Optional[int]) -> OpacityVerdict:
    """Macro-state search on the memo automaton.

    In an observable ERA every run with the same timed trace carries the same
    clock valuation, so a macro-state pairs one shared clock region with the
    set of (still running) locations reachable on that trace. A trace is
    accepted privately/publicly according to the copy tags of the final
    locations its runs can end in; it violates weak opacity when a
    visited-copy final is reachable but no not-yet-copy final is, and full
    opacity also checks the mirror image.

    Acceptance evidence is per trace, so the violation test runs on every
    arrival (entry hits plus the silent/delay closure of the target node),
    while node deduplication only limits expansion.
    """
    from .regions import RegionCapExceeded, dense_delay_successor, discrete_delay_successor, region_cap

    memo = build_memo(ta)
    maxc = memo.max_constants()
    successor = discrete_delay_successor if memo.time_domain == "discrete" else dense_delay_successor
    limit = region_cap(cap)

    clock_of = {}
    for e in memo.edges:
        if e.action is not EPSILON:
            (clock_of[e.action],) = e.resets

    def tag(loc: str) -> Optional[str]:
        if loc in memo.final:
            return "S" if loc.endswith(S_TAG) else "nS"
        return None

    def eps_close(cr, locs):
        """Silent closure at a fixed clock region; returns the closed set of
        non-final locations plus the final tags hit on the way."""
        alive = set()
        tags = set()
        todo = list(locs)
        seen = set(todo)
        while todo:
            loc = todo.pop()
            t = tag(loc)
            if t:
                tags.add(t)
                continue  # runs end at the first final location
            alive.add(loc)
            for e in memo.edges_from(loc):
                if e.action is EPSILON and e.target not in seen:
                    if cr.satisfies_guard(e.guard) and cr.satisfies_guard(memo.invariant_of(e.target)):
                        seen.add(e.target)
                        todo.append(e.target)
        return frozenset(alive), frozenset(tags)

    def survivors(cr, locs):
        return frozenset(l for l in locs if cr.satisfies_guard(memo.invariant_of(l)))

    closure_memo: dict[tuple, frozenset] = {}

    def closure_tags(node) -> frozenset:
        """Final tags reachable from the node via delays and silent moves."""
        if node in closure_memo:
            return closure_memo[node]
        tags = set()
        seen = {node}
        todo = [node]
        while todo:
            c, ls = todo.pop()
            ls2, tg = eps_close(c, ls)
            tags |= tg
            succ = successor(c, maxc)
            if succ is None:
                continue
            ls3 = survivors(succ, ls2)
            if not ls3:
                continue
            nxt = (succ, ls3)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
        result = frozenset(tags)
        closure_memo[node] = result
        return result

    def violation(tags: frozenset) -> Optional[str]:
        if "S" in tags and "nS" not in tags:
            return "priv-not-pub"
        if mode == "full" and "nS" in tags and "S" not in tags:
            return "pub-not-priv"
        return None

    init_cr = clock_region_of(memo.zero_valuation(), maxc)
    if not init_cr.satisfies_guard(memo.invariant_of(memo.init)):
        return OpacityVerdict(True, note="empty language")
    start_locs, seed_tags = eps_close(init_cr, [memo.init])
    start = (init_cr, start_locs)
    side = violation(seed_tags | closure_tags(start))
    if side is not None:
        return OpacityVerdict(False, witness=TimedWord(()), side=side)

    parents: dict[tuple, Optional[tuple]] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        cr, locs = node
        # delay successor: no new trace, so no violation check needed here
        succ = successor(cr, maxc)
        if succ is not None:
            closed, _ = eps_close(succ, survivors(succ, locs))
            nxt = (succ, closed)
            if closed and nxt not in parents:
                parents[nxt] = (node, "delay", None)
                queue.append(nxt)
        for letter in sorted(a for a in memo.actions if a in clock_of):
            targets = set()
            direct_tags = set()
            for loc in locs:
                for e in memo.edges_from(loc):
                    if e.action != letter or not cr.satisfies_guard(e.guard):
                        continue
                    cr2 = cr.reset(e.resets)
                    if not cr2.satisfies_guard(memo.invariant_of(e.target)):
                        continue
                    t = tag(e.target)
                    if t:
                        direct_tags.add(t)
                    else:
                        targets.add(e.target)
            if not targets and not direct_tags:
                continue
            cr2 = cr.reset(frozenset({clock_of[letter]}))
            closed, _ = eps_close(cr2, targets)
            nxt = (cr2, closed)
            side = violation(frozenset(direct_tags) | closure_tags(nxt))
            if side is not None:
                word = _oera_witness(memo, parents, node, letter)
                return OpacityVerdict(False, witness=word, side=side)
            if closed and nxt not in parents:
                if len(parents) >= limit:
                    raise RegionCapExceeded(limit)
                parents[nxt] = (node, "letter", letter)
                queue.append(nxt)
    return OpacityVerdict(True)


def _oera_witness(memo: TimedAutomaton, parents, node, last_letter: Optional[str]) -> TimedWord:
    """Concrete trace for an arrival: replay the shared clock region path
    with canonical delays, then the final letter."""
    from .regions import _canonical_delay

    steps = []
    cur = node
    while parents[cur] is not None:
        prev, kind, letter = parents[cur]
        steps.append((kind, letter))
        cur = prev
    steps.reverse()
    if last_letter is not None:
        steps.append(("letter", last_letter))
    maxc = memo.max_constants()
    val = {x: Fraction(0) for x in memo.clocks}
    clock_of = {}
    for e in memo.edges:
        if e.action is not EPSILON:
            (clock_of[e.action],) = e.resets
    now = Fraction(0)
    letters = []
    for kind, letter in steps:
        if kind == "delay":
            d = _canonical_delay(val, maxc, memo.time_domain)
            now += d
            val = {x: v + d for x, v in val.items()}
        else:
            letters.append((letter, now))
            val[clock_of[letter]] = Fraction(0)
    return TimedWord(tuple(letters))


# ---------------------------------------------------------------------------
# Bounded-attacker pipeline


def check_bounded(
    ta: TimedAutomaton,
    sel: TimeSelection,
    mode: str,
    cap: Optional[int] = None,
    obs_cap: int = DEFAULT_OBSERVATION_CAP,
) -> OpacityVerdict:
    """Weak/full opacity against a bounded attacker.

    First-N: the tick construction over the private/public split, compared as
    untimed regular languages. Static switch times: normalize the sequence,
    unfold against it, then the first-N machinery (the projection is the
    identity on the already bounded language). Dynamic: the free unfolding,
    then first-2N.
    """
    if mode not in ("weak", "full"):
        raise ValueError("mode must be 'weak' or 'full'")
    if isinstance(sel, Dynamic):
        if 2 * sel.n > obs_cap:
            raise ObservationCapExceeded(2 * sel.n, obs_cap)
        inner = check_bounded(unfold_free(ta, sel.n), FirstN(2 * sel.n), mode, cap, obs_cap)
        return OpacityVerdict(inner.holds, inner.witness, inner.side,
                              note="witness includes the attacker's arming letters")
    if isinstance(sel, Static):
        tau = normalize_sequence(sel.times)
        if len(tau) > obs_cap:
            raise ObservationCapExceeded(len(tau), obs_cap)
        base = force_integer_actions(ta) if ta.time_domain == "discrete" else ta
        fracs = {t - (t.numerator // t.denominator) for t in tau} - {Fraction(0)}
        factor = len(fracs) + 1
        inner = check_bounded(unfold_tau(base, tau), FirstN(len(tau)), mode, cap, obs_cap)
        witness = inner.witness.scaled(Fraction(1, factor)) if inner.witness is not None else None
        return OpacityVerdict(inner.holds, witness, inner.side,
                              note="witness uses the normalized switch-time sequence")
    if not isinstance(sel, FirstN):
        raise TypeError(f"unsupported time selection {sel!r}")
    if sel.n > obs_cap:
        raise ObservationCapExceeded(sel.n, obs_cap)
    base = force_integer_actions(ta) if ta.time_domain == "discrete" else ta
    priv = _ticked_bounded_language(build_priv(base), sel.n, cap, obs_cap)
    pub = _ticked_bounded_language(build_pub(base), sel.n, cap, obs_cap)
    alphabet = nfalib.merge_alphabets(priv, pub)
    inc = check_inclusion(priv, pub, alphabet)
    if not inc.holds:
        return OpacityVerdict(False, witness=decode_ticked_tokens(inc.counterexample), side="priv-not-pub")
    if mode == "weak":
        return OpacityVerdict(True)
    inc = check_inclusion(pub, priv, alphabet)
    if not inc.holds:
        return OpacityVerdict(False, witness=decode_ticked_tokens(inc.counterexample), side="pub-not-priv")
    return OpacityVerdict(True)


def _ticked_bounded_language(ta: TimedAutomaton, n: int, cap: Optional[int], obs_cap: int) -> NFA:
    tick = tick_construction(ta, n, obs_cap)
    ra = build_region_automaton(tick, cap)
    m = from_region_automaton(ra)
    suffix = frozenset(a for a in m.alphabet if a.startswith("f{"))
    # ticks between the last observation and the final location only encode
    # unobserved waiting; erase them so equal projected traces coincide
    return nfalib.strip_ticks_before_suffix(m, suffix, TICK_LETTER)


def decode_ticked_tokens(tokens) -> TimedWord:
    """Representative timed word of a ticked word: integral parts from the
    tick runs, the i-th fractional group mapped to fraction i/(m+2)."""
    gaps = []
    letters = []
    ticks = 0
    groups = []
    for tok in tokens:
        if tok == TICK_LETTER:
            ticks += 1
        elif tok.startswith("f{"):
            groups.append(parse_group(tok))
        else:
            letters.append(tok)
            gaps.append(ticks)
            ticks = 0
    m = len(groups) - 1
    frac_of_index: dict[int, Fraction] = {}
    for g_idx, group in enumerate(groups):
        for i in group:
            frac_of_index[i] = Fraction(g_idx, m + 2) if m >= 0 else Fraction(0)
    out = []
    base = 0
    for i, (letter, gap) in enumerate(zip(letters, gaps), start=1):
        base += gap
        out.append((letter, base + frac_of_index.get(i, Fraction(0))))
    return TimedWord(tuple(out))


# ---------------------------------------------------------------------------
# Witness descriptions with large tick exponents


class WitnessFormatError(ValueError):
    pass


def parse_witness_description(desc: Union[str, list]) -> list[tuple[str, int]]:
    """Tokens of the form `t`, `t^K` (K decimal, arbitrarily large), plain
    letters, or `f{...}` groups; returns (token, repeat) pairs."""
    tokens = desc.split() if isinstance(desc, str) else list(desc)
    out = []
    for tok in tokens:
        if tok.startswith("t^"):
            try:
                k = int(tok[2:])
            except ValueError as exc:
                raise WitnessFormatError(f"bad tick exponent in {tok!r}") from exc
            if k < 0:
                raise WitnessFormatError(f"negative tick exponent in {tok!r}")
            out.append((TICK_LETTER, k))
        else:
            out.append((tok, 1))
    return out


def verify_witness(
    ra1: RegionAutomaton,
    ra2: Optional[RegionAutomaton],
    desc: Union[str, list],
) -> tuple[bool, Optional[bool]]:
    """Acceptance of a witness description by one or two region automata,
    evaluated with boolean reachability matrices; tick runs t^K are applied
    through K's binary digits by repeated squaring, so K may be huge."""
    tokens = parse_witness_description(desc)
    acc1 = _matrix_accepts(from_region_automaton(ra1), tokens, ra1.alphabet | {TICK_LETTER})
    acc2 = (
        _matrix_accepts(from_region_automaton(ra2), tokens, ra2.alphabet | {TICK_LETTER})
        if ra2 is not None
        else None
    )
    return acc1, acc2


def _matrix_accepts(m: NFA, tokens: list[tuple[str, int]], allowed: frozenset[str]) -> bool:
    letters = {tok for tok, repeat in tokens if repeat > 0}
    unknown = letters - set(allowed)
    if unknown:
        raise WitnessFormatError(f"letters outside the alphabet: {sorted(unknown)}")
    letters &= set(m.alphabet)  # letters with no edges anywhere reject below
    closure = nfalib.eps_closure_matrix(m)
    sandwiched = {
        a: nfalib.mat_mul(nfalib.mat_mul(closure, nfalib.letter_matrix(m, a)), closure)
        for a in letters
    }
    vec = nfalib.vec_mul(nfalib._bitset(m.initial), closure)
    for tok, repeat in tokens:
        if repeat == 0:
            continue
        if tok not in sandwiched:
            return False  # letter without any edge
        if repeat == 1:
            vec = nfalib.vec_mul(vec, sandwiched[tok])
        else:
            vec = nfalib.vec_mul(vec, nfalib.mat_pow(sandwiched[tok], repeat))
        if not vec:
            return False
    return bool(vec & nfalib._bitset(m.finals))


def nfa_accepts_expanded(m: NFA, tokens: list[tuple[str, int]]) -> bool:
    """Step-by-step simulation with tick runs expanded literally."""
    word = []
    for tok, repeat in tokens:
        word.extend([tok] * repeat)
    return m.accepts(word)


# ---------------------------------------------------------------------------
# Exact membership of a timed word


def accepts_word(ta: TimedAutomaton, w: TimedWord, cap: Optional[int] = None) -> bool:
    """Does `ta` accept `w`? Exact, via reachability in the region automaton
    of the product with the word's class recognizer (a language contains a
    word iff it meets the word's equivalence class)."""
    from .constructions import product

    if any(a not in ta.actions for a, _ in w):
        return False
    base = force_integer_actions(ta) if ta.time_domain == "discrete" else ta
    if ta.time_domain == "discrete" and any(t.denominator != 1 for t in w.timestamps()):
        return False
    rec = class_recognizer(w)
    if not w.letters:
        # empty-word membership: can a final be reached silently?
        ra = build_region_automaton(base, cap)
        return _silent_final_reachable(ra)
    prod = product(base, rec)
    ra = build_region_automaton(prod, cap)
    return _shortest_accepting_path(ra) is not None


def _silent_final_reachable(ra: RegionAutomaton) -> bool:
    if ra.initial is None:
        return False
    seen = {ra.initial}
    todo = [ra.initial]
    while todo:
        r = todo.pop()
        if r in ra.finals:
            return True
        for e in ra.out_edges(r):
            if e.label is None and e.target not in seen:
                seen.add(e.target)
                todo.append(e.target)
    return False
