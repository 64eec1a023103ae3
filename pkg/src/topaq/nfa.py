"""Finite-automaton machinery over region automata.

Everything downstream of the region construction is plain NFA work: silent
closure, language inclusion with an antichain-pruned product against the
determinized complement, the tick-normalization transforms, and bitset-based
boolean reachability matrices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .regions import RegionAutomaton, TICK_LETTER


class InclusionCapExceeded(Exception):
    pass


@dataclass
class NFA:
    alphabet: tuple[str, ...]  # sorted, silent moves excluded
    n_states: int
    initial: frozenset[int]
    finals: frozenset[int]
    eps: list[frozenset[int]]  # per-state silent successors
    trans: list[dict[str, frozenset[int]]]  # per-state lettered successors

    def _tables(self):
        """Per-state silent closure and closed letter-successor tables."""
        if not hasattr(self, "_closure1"):
            closure1 = []
            for s in range(self.n_states):
                seen = {s}
                todo = [s]
                while todo:
                    q = todo.pop()
                    for t in self.eps[q]:
                        if t not in seen:
                            seen.add(t)
                            todo.append(t)
                closure1.append(frozenset(seen))
            post: list[dict[str, frozenset[int]]] = []
            for s in range(self.n_states):
                d = {}
                for a in self.alphabet:
                    raw = set()
                    for q in closure1[s]:
                        raw |= self.trans[q].get(a, frozenset())
                    if raw:
                        closed = set()
                        for q in raw:
                            closed |= closure1[q]
                        d[a] = frozenset(closed)
                post.append(d)
            self._closure1 = closure1
            self._post = post
        return self._closure1, self._post

    def closure(self, states: Iterable[int]) -> frozenset[int]:
        closure1, _ = self._tables()
        out = set()
        for s in states:
            out |= closure1[s]
        return frozenset(out)

    def step(self, states: frozenset[int], letter: str) -> frozenset[int]:
        _, post = self._tables()
        out = set()
        for s in states:
            out |= post[s].get(letter, frozenset())
        return frozenset(out)

    def start(self) -> frozenset[int]:
        return self.closure(self.initial)

    def accepts(self, word: Iterable[str]) -> bool:
        cur = self.start()
        for a in word:
            if a not in self.trans_alphabet():
                return False
            cur = self.step(cur, a)
            if not cur:
                return False
        return bool(cur & self.finals)

    def trans_alphabet(self) -> frozenset[str]:
        return frozenset(self.alphabet)

    def language_upto(self, max_len: int, cap: int = 200_000) -> set[tuple[str, ...]]:
        """All accepted words of length <= max_len (for small-case oracles)."""
        out = set()
        frontier = {(): self.start()}
        count = 0
        for _ in range(max_len + 1):
            nxt = {}
            for word, states in sorted(frontier.items()):
                if states & self.finals:
                    out.add(word)
                if len(word) == max_len:
                    continue
                for a in self.alphabet:
                    s2 = self.step(states, a)
                    if s2:
                        nxt[word + (a,)] = s2
                        count += 1
                        if count > cap:
                            raise InclusionCapExceeded("language enumeration cap exceeded")
            frontier = nxt
        return out


def from_region_automaton(ra: RegionAutomaton) -> NFA:
    """NFA view of a region automaton: delay edges and ε-labelled action
    edges become silent; the alphabet is the set of letters on real edges."""
    index = {r: i for i, r in enumerate(ra.states)}
    n = len(ra.states)
    eps = [set() for _ in range(n)]
    trans: list[dict[str, set[int]]] = [{} for _ in range(n)]
    letters = set()
    for r in ra.states:
        i = index[r]
        for e in ra.out_edges(r):
            j = index[e.target]
            if e.label is None:
                eps[i].add(j)
            else:
                letters.add(e.label)
                trans[i].setdefault(e.label, set()).add(j)
    initial = frozenset([index[ra.initial]]) if ra.initial is not None else frozenset()
    finals = frozenset(index[r] for r in ra.finals)
    return NFA(
        alphabet=tuple(sorted(letters)),
        n_states=n,
        initial=initial,
        finals=finals,
        eps=[frozenset(s) for s in eps],
        trans=[{a: frozenset(v) for a, v in d.items()} for d in trans],
    )


def merge_alphabets(*nfas: NFA) -> tuple[str, ...]:
    letters = set()
    for m in nfas:
        letters |= set(m.alphabet)
    return tuple(sorted(letters))


@dataclass(frozen=True)
class InclusionResult:
    holds: bool
    counterexample: Optional[tuple[str, ...]] = None


def check_inclusion(a: NFA, b: NFA, alphabet: Optional[tuple[str, ...]] = None,
                    pair_cap: int = 2_000_000) -> InclusionResult:
    """Does L(a) ⊆ L(b)? On failure returns a shortest counterexample,
    breaking ties lexicographically by alphabet order.

    On-the-fly product of `a` with the determinized complement of `b`;
    antichain subsumption ((s, T) is dominated by a visited (s, T') with
    T' ⊆ T) prunes the search without changing verdicts.
    """
    alphabet = alphabet or merge_alphabets(a, b)
    _, post_a = a._tables()
    b_start = b.start()
    b_step_memo: dict[tuple[frozenset[int], str], frozenset[int]] = {}
    # antichain store: per a-state, the set of minimal b-subsets seen
    seen: dict[int, list[frozenset[int]]] = {}

    def dominated(s: int, t: frozenset[int]) -> bool:
        return any(prev <= t for prev in seen.get(s, ()))

    def record(s: int, t: frozenset[int]) -> None:
        bucket = seen.setdefault(s, [])
        bucket[:] = [prev for prev in bucket if not (t <= prev)]
        bucket.append(t)

    queue = deque()
    for s in sorted(a.start()):
        if not dominated(s, b_start):
            record(s, b_start)
            queue.append((s, b_start, ()))
    explored = 0
    while queue:
        s, t, word = queue.popleft()
        if s in a.finals and not (t & b.finals):
            return InclusionResult(False, word)
        for letter in alphabet:
            succs_a = post_a[s].get(letter)
            if not succs_a:
                continue
            key = (t, letter)
            t2 = b_step_memo.get(key)
            if t2 is None:
                t2 = b.step(t, letter)
                b_step_memo[key] = t2
            for s2 in sorted(succs_a):
                explored += 1
                if explored > pair_cap:
                    raise InclusionCapExceeded("inclusion search cap exceeded")
                if not dominated(s2, t2):
                    record(s2, t2)
                    queue.append((s2, t2, word + (letter,)))
    return InclusionResult(True, None)


def naive_inclusion(a: NFA, b: NFA, alphabet: Optional[tuple[str, ...]] = None) -> bool:
    """Reference subset-construction inclusion check (cross-validation only)."""
    alphabet = alphabet or merge_alphabets(a, b)
    start = (a.start(), b.start())
    seen = {start}
    todo = [start]
    while todo:
        sa, sb = todo.pop()
        if (sa & a.finals) and not (sb & b.finals):
            return False
        for letter in alphabet:
            nxt = (a.step(sa, letter), b.step(sb, letter))
            if nxt[0] and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return True


def strip_trailing_letter(m: NFA, letter: str = TICK_LETTER) -> NFA:
    """Language image under removal of a maximal trailing `letter` run.

    States from which a final is reachable via only `letter`/silent moves
    become accepting, and words ending in `letter` are then excluded, so the
    result is exactly { strip(u) : u in L(m) }.
    """
    # backward closure: can reach a final using only `letter` and ε edges
    rev = [set() for _ in range(m.n_states)]
    for i in range(m.n_states):
        for j in m.eps[i]:
            rev[j].add(i)
        for j in m.trans[i].get(letter, frozenset()):
            rev[j].add(i)
    good = set(m.finals)
    todo = list(good)
    while todo:
        s = todo.pop()
        for p in rev[s]:
            if p not in good:
                good.add(p)
                todo.append(p)
    # forbid a trailing `letter`: double the automaton on a came-via-letter flag
    def idx(s, flag):
        return 2 * s + flag

    eps = []
    trans: list[dict[str, frozenset[int]]] = []
    for s in range(m.n_states):
        for flag in (0, 1):
            eps.append(frozenset(idx(j, flag) for j in m.eps[s]))
            d = {}
            for a, succs in m.trans[s].items():
                nf = 1 if a == letter else 0
                d[a] = frozenset(idx(j, nf) for j in succs)
            trans.append(d)
    return NFA(
        alphabet=m.alphabet,
        n_states=2 * m.n_states,
        initial=frozenset(idx(s, 0) for s in m.initial),
        finals=frozenset(idx(s, 0) for s in good),
        eps=eps,
        trans=trans,
    )


def strip_ticks_before_suffix(m: NFA, suffix_letters: frozenset[str], letter: str = TICK_LETTER) -> NFA:
    """Language image under removal of the maximal `letter` run separating
    the last non-suffix letter from the suffix block.

    Three phases per state: the prefix phase reads tick and action letters
    (never suffix letters) and tracks whether the last letter read was a
    tick; a silent jump, allowed only when it was not, follows any path of
    `letter`/silent edges; the suffix phase admits suffix letters only. The
    jump must swallow the whole separating run, because a leftover tick
    before the suffix block has nowhere to be read.
    """
    reach_via_letter = _letter_closure_map(m, letter)

    def idx(s, phase):  # 0: prefix after non-tick, 1: prefix after tick, 2: suffix
        return 3 * s + phase

    eps = []
    trans: list[dict[str, frozenset[int]]] = []
    for s in range(m.n_states):
        for phase in (0, 1):
            e = {idx(j, phase) for j in m.eps[s]}
            if phase == 0:
                e |= {idx(j, 2) for j in reach_via_letter[s]}
            eps.append(frozenset(e))
            d = {}
            for a, succs in m.trans[s].items():
                if a in suffix_letters:
                    continue
                d[a] = frozenset(idx(j, 1 if a == letter else 0) for j in succs)
            trans.append(d)
        eps.append(frozenset(idx(j, 2) for j in m.eps[s]))
        trans.append(
            {
                a: frozenset(idx(j, 2) for j in succs)
                for a, succs in m.trans[s].items()
                if a in suffix_letters
            }
        )
    return NFA(
        alphabet=m.alphabet,
        n_states=3 * m.n_states,
        initial=frozenset(idx(s, 0) for s in m.initial),
        finals=frozenset(idx(s, 2) for s in m.finals),
        eps=eps,
        trans=trans,
    )


def _letter_closure_map(m: NFA, letter: str) -> list[set[int]]:
    """Per state: everything reachable via `letter` and silent edges."""
    out = []
    for s in range(m.n_states):
        seen = {s}
        todo = [s]
        while todo:
            q = todo.pop()
            succs = set(m.eps[q]) | set(m.trans[q].get(letter, frozenset()))
            for t in succs:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        out.append(seen)
    return out


# ---------------------------------------------------------------------------
# Boolean reachability matrices (rows as integer bitsets)


def eps_closure_matrix(m: NFA) -> list[int]:
    rows = []
    for s in range(m.n_states):
        rows.append(_bitset(m.closure([s])))
    return rows


def letter_matrix(m: NFA, letter: str) -> list[int]:
    return [_bitset(m.trans[s].get(letter, frozenset())) for s in range(m.n_states)]


def mat_mul(a: list[int], b: list[int]) -> list[int]:
    out = []
    for row in a:
        acc = 0
        r = row
        while r:
            j = (r & -r).bit_length() - 1
            acc |= b[j]
            r &= r - 1
        out.append(acc)
    return out


def mat_pow(m: list[int], k: int) -> list[int]:
    """m^k by repeated squaring."""
    n = len(m)
    result = [1 << i for i in range(n)]  # identity
    base = m
    while k:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        k >>= 1
    return result


def vec_mul(vec: int, m: list[int]) -> int:
    acc = 0
    v = vec
    while v:
        j = (v & -v).bit_length() - 1
        acc |= m[j]
        v &= v - 1
    return acc


def _bitset(states: Iterable[int]) -> int:
    acc = 0
    for s in states:
        acc |= 1 << s
    return acc
