"""DOT and JSON exports of automata and region automata."""

from __future__ import annotations

import json

from .regions import RegionAutomaton
from .ta import EPSILON, TimedAutomaton


def _q(s: str) -> str:
    return '"' + s.replace('"', r"\"") + '"'


def ta_to_dot(ta: TimedAutomaton) -> str:
    lines = ["digraph ta {", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for loc in sorted(ta.locations):
        shape = "doublecircle" if loc in ta.final else "circle"
        style = ', style=filled, fillcolor="lightgrey"' if loc in ta.private else ""
        inv = ta.invariant_of(loc)
        label = loc if not inv.conjuncts else f"{loc}\\n{inv}"
        lines.append(f"  {_q(loc)} [shape={shape}, label={_q(label)}{style}];")
    lines.append(f"  __init -> {_q(ta.init)};")
    for e in ta.edges:
        bits = [e.action if e.action is not EPSILON else "ε"]
        if e.guard.conjuncts:
            bits.append(str(e.guard))
        if e.resets:
            bits.append("reset " + ",".join(sorted(e.resets)))
        lines.append(f"  {_q(e.source)} -> {_q(e.target)} [label={_q(chr(10).join(bits))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def region_automaton_to_dot(ra: RegionAutomaton) -> str:
    def rname(r):
        return f"{r.location} | {r.clock_region.describe(ra.max_constants)}"

    lines = ["digraph regions {", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for r in ra.states:
        shape = "doublecircle" if r in ra.finals else "box"
        lines.append(f"  {_q(rname(r))} [shape={shape}];")
    if ra.initial is not None:
        lines.append(f"  __init -> {_q(rname(ra.initial))};")
    for r in ra.states:
        for e in ra.out_edges(r):
            label = e.label if e.label is not None else "ε"
            lines.append(f"  {_q(rname(r))} -> {_q(rname(e.target))} [label={_q(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def ta_to_json(ta: TimedAutomaton) -> str:
    doc = {
        "name": ta.name,
        "time": ta.time_domain,
        "actions": sorted(ta.actions),
        "clocks": sorted(ta.clocks),
        "init": ta.init,
        "private": sorted(ta.private),
        "final": sorted(ta.final),
        "locations": [
            {"name": loc, "invariant": str(ta.invariant_of(loc))} for loc in sorted(ta.locations)
        ],
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "action": e.action if e.action is not EPSILON else "eps",
                "guard": str(e.guard),
                "resets": sorted(e.resets),
            }
            for e in ta.edges
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def region_automaton_to_json(ra: RegionAutomaton) -> str:
    index = {r: i for i, r in enumerate(ra.states)}
    doc = {
        "alphabet": sorted(ra.alphabet),
        "states": [
            {
                "id": i,
                "location": r.location,
                "clock_region": r.clock_region.describe(ra.max_constants),
                "final": r in ra.finals,
            }
            for i, r in enumerate(ra.states)
        ],
        "initial": index[ra.initial] if ra.initial is not None else None,
        "edges": [
            {
                "source": index[r],
                "target": index[e.target],
                "label": e.label if e.label is not None else "eps",
                "kind": e.kind,
            }
            for r in ra.states
            for e in ra.out_edges(r)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
