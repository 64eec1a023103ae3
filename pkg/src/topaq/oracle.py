"""Independent brute-force ground truth: bounded run enumeration and direct
evaluation of the opacity definitions on the enumerated trace sets."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .observers import Dynamic, FirstN, Static, project
from .ta import (
    EPSILON,
    BoundExhausted,
    StepError,
    TimedAutomaton,
    TimedWord,
    enumerate_runs,
    is_private_run,
    step,
    trace_of,
)


@dataclass(frozen=True)
class OracleVerdict:
    status: str  # "holds" | "violated" | "inconclusive"
    witness: Optional[TimedWord] = None
    side: Optional[str] = None
    diagnostics: dict = field(default_factory=dict)

    def as_opacity_verdict(self):
        from .deciders import OpacityVerdict

        holds = {"holds": True, "violated": False, "inconclusive": None}[self.status]
        return OpacityVerdict(holds, self.witness, self.side, note=self.diagnostics.get("note", ""))


def default_granularity(ta: TimedAutomaton, obs: int = 0) -> Fraction:
    """1/(|X| + N + 2) for dense time: enough distinct fractional values to
    populate every fractional-ordering pattern at this clock count. This is a
    documented heuristic for desk-scale models, not a completeness theorem."""
    if ta.time_domain == "discrete":
        return Fraction(1)
    return Fraction(1, len(ta.clocks) + obs + 2)


def default_horizon(ta: TimedAutomaton) -> Fraction:
    maxc = ta.max_constants()
    return Fraction(max(maxc.values(), default=0) + len(ta.locations) + 1)


def discrete_state_count(ta: TimedAutomaton) -> int:
    """|L| * prod(M(x)+2): the discrete-time region count."""
    maxc = ta.max_constants()
    n = len(ta.locations)
    for x in ta.clocks:
        n *= maxc[x] + 2
    return n


def trace_sets(
    ta: TimedAutomaton,
    horizon: Fraction,
    max_steps: int,
    granularity: Fraction,
    node_cap: int = 2_000_000,
) -> tuple[set[TimedWord], set[TimedWord], bool]:
    """(private traces, public traces, complete?) over the enumerated runs."""
    result = enumerate_runs(ta, horizon, max_steps, granularity, node_cap=node_cap, dedup=True)
    t_priv, t_pub = set(), set()
    for run in result.runs:
        (t_priv if is_private_run(ta, run) else t_pub).add(trace_of(run))
    return t_priv, t_pub, result.complete


def can_produce(
    ta: TimedAutomaton,
    w: TimedWord,
    want_private: bool,
    horizon: Fraction,
    granularity: Fraction,
    node_cap: int = 500_000,
) -> bool:
    """Is `w` the trace of a private (resp. public) run whose delays lie on
    the granularity grid within the horizon?

    A saturating search with no step budget: states deduplicate on
    (configuration, privacy flag, elapsed time, letters matched), so silent
    cycles cannot blow it up. Used to confirm that a violation candidate
    really has no matching run on the other side at the stated grid.
    """
    horizon, granularity = Fraction(horizon), Fraction(granularity)
    init = ta.initial_configuration()
    if not ta.invariant_of(init.location).holds(init.valuation):
        return False
    if not want_private and init.location in ta.private:
        return False
    stamps = w.timestamps()
    letters = w.untimed()
    n = len(letters)

    start = (init, init.location in ta.private, Fraction(0), 0)
    seen = {(init.key(), start[1], start[2], 0)}
    queue = deque([start])
    explored = 0
    while queue:
        cfg, flag, elapsed, i = queue.popleft()
        if cfg.location in ta.final:
            if i == n and (flag if want_private else True):
                return True
            continue  # runs end at the first final location
        budget = horizon - elapsed
        k = 0
        while k * granularity <= budget:
            d = k * granularity
            k += 1
            now = elapsed + d
            for e in ta.edges_from(cfg.location):
                if e.action is EPSILON:
                    ni = i
                elif i < n and e.action == letters[i] and now == stamps[i]:
                    ni = i + 1
                else:
                    continue
                if not want_private and e.target in ta.private:
                    continue
                try:
                    nxt = step(ta, cfg, d, e)
                except StepError:
                    continue
                nflag = flag or nxt.location in ta.private
                key = (nxt.key(), nflag, now, ni)
                if key in seen:
                    continue
                explored += 1
                if explored > node_cap:
                    raise BoundExhausted("membership search cap exceeded")
                seen.add(key)
                queue.append((nxt, nflag, now, ni))
    return False


def oracle_check(
    ta: TimedAutomaton,
    query: str,
    sel: Optional[Union[FirstN, Static]] = None,
    horizon: Optional[Fraction] = None,
    max_steps: Optional[int] = None,
    granularity: Optional[Fraction] = None,
    node_cap: int = 2_000_000,
) -> OracleVerdict:
    """Evaluate an opacity definition literally over enumerated runs.

    A violation is reported only after the candidate trace is confirmed to
    have no matching run on the other side at the stated grid (the bounded
    enumeration may cut long matching runs, the saturating membership search
    does not). The absence of a violation is definitive only for discrete
    time with the enumeration complete, the horizon at least the maximum
    constant plus |L|+1, and the step budget at least the discrete region
    count (a longer run revisits a region and the silent cycle between the
    repeats can be cut without changing its trace); otherwise the verdict is
    inconclusive.
    """
    if query not in ("exists", "weak", "full"):
        raise ValueError("query must be exists|weak|full")
    if isinstance(sel, Dynamic):
        raise ValueError(
            "the dynamic selection has no executable projection; use the free unfolding reduction instead"
        )
    obs = sel.n if isinstance(sel, FirstN) else len(sel.times) if isinstance(sel, Static) else 0
    if granularity is None:
        granularity = default_granularity(ta, obs)
    if horizon is None:
        horizon = default_horizon(ta)
    if max_steps is None:
        # the discrete definitive cover needs the full region count; dense
        # searches are inconclusive-unless-violated anyway, so stay small
        max_steps = min(discrete_state_count(ta), 24) if ta.time_domain == "discrete" else 8
    horizon, granularity = Fraction(horizon), Fraction(granularity)

    t_priv, t_pub, complete = trace_sets(ta, horizon, max_steps, granularity, node_cap)
    if sel is not None:
        t_priv = {project(w, sel) for w in t_priv}
        t_pub = {project(w, sel) for w in t_pub}

    definitive = (
        complete
        and ta.time_domain == "discrete"
        and horizon >= default_horizon(ta)
        and max_steps >= discrete_state_count(ta)
    )
    diag = {
        "horizon": str(horizon),
        "granularity": str(granularity),
        "max_steps": max_steps,
        "complete": complete,
        "private_traces": len(t_priv),
        "public_traces": len(t_pub),
        "definitive_cover": definitive,
    }
    if definitive:
        diag["note"] = (
            "definitive: discrete time, enumeration complete, horizon covers max constant + |L| + 1, "
            "steps cover the discrete region count (silent cycles between region repeats are cuttable)"
        )

    if query == "exists":
        common = t_priv & t_pub
        if common:
            return OracleVerdict(
                "holds", witness=min(common, key=lambda w: w.sort_key()), side="intersection", diagnostics=diag
            )
        return OracleVerdict("violated" if definitive else "inconclusive", diagnostics=diag)

    boosted: dict[bool, Optional[set[TimedWord]]] = {}
    unconfirmed = False

    def matched_elsewhere(w: TimedWord, matched_private: bool) -> Optional[bool]:
        """True/False when decided; None when the recheck ran out of budget."""
        if sel is None:
            try:
                return can_produce(ta, w, matched_private, horizon, granularity)
            except BoundExhausted:
                return None
        # projections cannot be replayed directly; recheck against the other
        # side's projected set at a boosted step budget instead
        if matched_private not in boosted:
            result = enumerate_runs(ta, horizon, max_steps + 4, granularity, node_cap=node_cap, dedup=True)
            if not result.complete:
                boosted[matched_private] = None
            else:
                side = {
                    trace_of(r) for r in result.runs if is_private_run(ta, r) == matched_private
                }
                boosted[matched_private] = {project(u, sel) for u in side}
        table = boosted[matched_private]
        return None if table is None else w in table

    def confirmed_witness(candidates: set[TimedWord], matched_private: bool) -> Optional[TimedWord]:
        """The canonical (greatest of the shortest) candidate confirmed to
        have no matching run on the other side."""
        nonlocal unconfirmed
        by_len: dict[int, list[TimedWord]] = {}
        for w in sorted(candidates, key=lambda u: u.sort_key()):
            by_len.setdefault(len(w), []).append(w)
        for length in sorted(by_len):
            for w in reversed(by_len[length]):
                verdict = matched_elsewhere(w, matched_private)
                if verdict is False:
                    return w
                if verdict is None:
                    unconfirmed = True
        return None

    missing_pub = t_priv - t_pub
    if missing_pub:
        w = confirmed_witness(missing_pub, matched_private=False)
        if w is not None:
            return OracleVerdict("violated", witness=w, side="priv-not-pub", diagnostics=diag)
    if query == "full":
        missing_priv = t_pub - t_priv
        if missing_priv:
            w = confirmed_witness(missing_priv, matched_private=True)
            if w is not None:
                return OracleVerdict("violated", witness=w, side="pub-not-priv", diagnostics=diag)
    if unconfirmed:
        diag["note"] = "violation candidates could not be confirmed within the resource caps"
        return OracleVerdict("inconclusive", diagnostics=diag)
    return OracleVerdict("holds" if definitive else "inconclusive", diagnostics=diag)
