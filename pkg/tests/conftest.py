from fractions import Fraction

import pytest

from topaq.ta import ClockConstraint, Guard, edge, make_ta


def fig1_ta(time_domain="dense"):
    """Three locations, one clock: an a-loop at the initial location
    (invariant x<=3), a silent move into the private location l2 (guard x>=1,
    invariant x<=2), and b-edges into the final location l1 from both."""
    return make_ta(
        actions={"a", "b"},
        locations={"l0", "l1", "l2"},
        init="l0",
        private={"l2"},
        final={"l1"},
        clocks={"x"},
        invariant={
            "l0": Guard.of(ClockConstraint("x", "<=", 3)),
            "l2": Guard.of(ClockConstraint("x", "<=", 2)),
        },
        edges=[
            edge("l0", "l0", "a"),
            edge("l0", "l2", None, Guard.of(ClockConstraint("x", ">=", 1))),
            edge("l0", "l1", "b"),
            edge("l2", "l1", "b"),
        ],
        time_domain=time_domain,
        name="fig1",
    )


@pytest.fixture
def fig1():
    return fig1_ta()


@pytest.fixture
def fig1_discrete():
    return fig1_ta("discrete")


def late_guard_ta():
    """One clock, one action: a single a-edge guarded x>2 into a final
    private location (the canonical discrete-time example)."""
    return make_ta(
        actions={"a"},
        locations={"l0", "lf"},
        init="l0",
        private={"lf"},
        final={"lf"},
        clocks={"x"},
        edges=[edge("l0", "lf", "a", Guard.of(ClockConstraint("x", ">", 2)))],
        time_domain="discrete",
        name="late-guard",
    )


@pytest.fixture
def discrete_example():
    return late_guard_ta()


def oera_pair_ta(with_guard=True):
    """Private branch l0-a->lp-b->lf, public branch l0-a->l2-b->lf; the
    public b carries the guard x_a >= 1 unless disabled."""
    g = Guard.of(ClockConstraint("xa", ">=", 1)) if with_guard else Guard.true()
    return make_ta(
        actions={"a", "b"},
        locations={"l0", "lp", "l2", "lf"},
        init="l0",
        private={"lp"},
        final={"lf"},
        clocks={"xa", "xb"},
        edges=[
            edge("l0", "lp", "a", resets={"xa"}),
            edge("lp", "lf", "b", resets={"xb"}),
            edge("l0", "l2", "a", resets={"xa"}),
            edge("l2", "lf", "b", g, resets={"xb"}),
        ],
        name="oera-pair",
    )


@pytest.fixture
def oera_guarded():
    return oera_pair_ta(True)


@pytest.fixture
def oera_unguarded():
    return oera_pair_ta(False)


def loop_and_deadline_ta():
    """a-loop at the initial location, b at exactly x=1 to the final (the
    running example for the switch-time unfoldings)."""
    return make_ta(
        actions={"a", "b"},
        locations={"li", "lf"},
        init="li",
        final={"lf"},
        clocks={"x"},
        edges=[
            edge("li", "li", "a"),
            edge("li", "lf", "b", Guard.of(ClockConstraint("x", "=", 1))),
        ],
        name="loop-deadline",
    )


@pytest.fixture
def loop_deadline():
    return loop_and_deadline_ta()


def single_word_ta(letter="a", at=1, domain="dense"):
    """Accepts exactly (letter, at)."""
    return make_ta(
        actions={letter},
        locations={"s", "f"},
        init="s",
        final={"f"},
        clocks={"c"},
        edges=[edge("s", "f", letter, Guard.of(ClockConstraint("c", "=", at)))],
        time_domain=domain,
        name=f"one-{letter}{at}",
    )


def frac(a, b=1):
    return Fraction(a, b)
