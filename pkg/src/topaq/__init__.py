"""topaq: timed-opacity verification for timed automata.

Model timed automata with private locations and decide existential, weak,
and full opacity on the decidable classes (discrete time, observable
event-recording automata, and bounded-observation attackers in first-N,
static, and dynamic flavors), cross-validated by an independent enumerative
oracle.
"""

from .constructions import (
    build_memo,
    build_priv,
    build_pub,
    embed_gadget,
    inclusion_gadget,
    product,
    swap_gadget,
)
from .deciders import (
    OpacityVerdict,
    UndecidableClass,
    accepts_word,
    check_bounded,
    check_exists,
    check_opacity,
    is_oera,
    verify_witness,
)
from .model import ModelError, parse_model, print_model
from .observers import (
    Dynamic,
    FirstN,
    Static,
    normalize_sequence,
    project,
    tick_construction,
    unfold_first_n,
    unfold_free,
    unfold_tau,
)
from .oracle import OracleVerdict, oracle_check
from .regions import (
    RegionAutomaton,
    RegionCapExceeded,
    augment_ticks,
    build_region_automaton,
    region_of,
    regular_inclusion,
    valuation_equiv,
)
from .ta import (
    EPSILON,
    ClockConstraint,
    Configuration,
    Edge,
    Guard,
    Run,
    TimedAutomaton,
    TimedWord,
    edge,
    enumerate_runs,
    make_ta,
    step,
    trace_of,
    validate,
)
from .words import class_recognizer, distort, ticked_word, word_equiv

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
