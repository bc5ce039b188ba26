import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffsmbench.errors import CounterexampleError, TeacherInconsistencyError
from ffsmbench.learner import (
    ALL_PREFIXES,
    CLOSE_FIRST,
    CLOSE_SHORTEST,
    RIVEST_SCHAPIRE,
    LearnerOptions,
    LStarMealy,
    MachineTeacher,
    ObservationTable,
    PerfectOracle,
    RandomWordsOracle,
    Teacher,
    WMethodOracle,
    build_hypothesis,
    characterizing_set,
    close_and_consist,
    learn,
    parse_oracle,
    process_counterexample,
    wmethod_suite,
)
from ffsmbench.mealy import MealyMachine, equivalent, minimize
from conftest import make_m3, make_one_state
from oracles import random_machine, rng


def table_for(machine):
    t = MachineTeacher(machine)
    return ObservationTable.initial(machine.inputs, t.answer_mq)


def test_one_state_costs(one_state):
    h, m = learn(one_state, one_state.inputs)
    assert (m.rounds, m.eq_count, m.mq_count, m.mq_symbols) == (1, 1, 6, 10)
    assert (m.eq_symbols, m.resets) == (0, 6)
    assert len(h.states) == 1


def test_initial_table(m3):
    ot = table_for(m3)
    assert ot.prefixes == [()]
    assert ot.boundary == [("a",), ("b",)]
    assert ot.suffixes == [("a",), ("b",)]
    assert ot.row(()) == ("0", "0")
    assert ot.is_closed() and ot.is_consistent()
    h = build_hypothesis(ot)
    assert len(h.states) == 1
    assert equivalent(h, m3) == ("a", "a", "a")


def test_close_adds_boundary_row():
    # a/1 then everything outputs 0: row(a) differs from row(eps)
    trans = {("p", "a"): ("q", "1"), ("p", "b"): ("p", "0"), ("q", "a"): ("q", "0"), ("q", "b"): ("q", "0")}
    m = MealyMachine(["p", "q"], "p", ["a", "b"], ["0", "1"], trans)
    ot = table_for(m)
    assert ot.find_unclosed() == ("a",)
    close_and_consist(ot)
    assert ot.prefixes == [(), ("a",)]
    h = build_hypothesis(ot)
    assert equivalent(h, m) is None


def test_inconsistency_adds_suffix(m3):
    ot = table_for(m3)
    ot.add_prefix(("a",))
    ot.add_prefix(("a", "a"))
    # eps and a share a row but their a-successors differ on suffix a
    assert ot.find_inconsistency() == ("a", "a")
    close_and_consist(ot)
    assert ot.is_closed() and ot.is_consistent()
    assert len(build_hypothesis(ot).states) == 3


def test_build_requires_closed_table():
    trans = {("p", "a"): ("q", "1"), ("q", "a"): ("q", "0")}
    ot = table_for(MealyMachine(["p", "q"], "p", ["a"], ["0", "1"], trans))
    with pytest.raises(ValueError, match="closed and consistent"):
        build_hypothesis(ot)


def test_closing_strategies_pick_differently():
    ot = ObservationTable(["a", "b"], lambda w: "x")
    ot.boundary = [("b", "a"), ("a",)]
    known = {("b", "a"): ("1",), ("a",): ("2",)}
    ot.prefixes = [()]
    ot.row = lambda w: known.get(tuple(w), ("0",))
    assert ot.find_unclosed(CLOSE_FIRST) == ("b", "a")
    assert ot.find_unclosed(CLOSE_SHORTEST) == ("a",)


def test_m3_all_prefixes(m3):
    ot = close_and_consist(table_for(m3))
    h = build_hypothesis(ot)
    process_counterexample(ot, ("a", "a", "a"), ALL_PREFIXES, h)
    assert ot.prefixes == [(), ("a",), ("a", "a"), ("a", "a", "a")]
    close_and_consist(ot)
    assert len(build_hypothesis(ot).states) == 3


def test_m3_rivest_schapire(m3):
    ot = close_and_consist(table_for(m3))
    h = build_hypothesis(ot)
    process_counterexample(ot, ("a", "a", "a"), RIVEST_SCHAPIRE, h)
    assert ("a", "a") in ot.suffixes
    assert ot.prefixes == [()]
    close_and_consist(ot)
    assert equivalent(build_hypothesis(ot), m3) is None


def test_m3_learn_metrics(m3):
    h, m = learn(m3, m3.inputs)
    assert m.rounds == 2 and m.hypothesis_states == [1, 3] and m.ce_lengths == [3]
    assert m.mq_count == 27
    _, rs = learn(m3, m3.inputs, LearnerOptions(ce_handling=RIVEST_SCHAPIRE))
    assert rs.rounds == 2 and rs.mq_count == 23


@pytest.mark.parametrize("mode", [ALL_PREFIXES, RIVEST_SCHAPIRE])
def test_not_a_counterexample(m3, mode):
    ot = close_and_consist(table_for(m3))
    h = build_hypothesis(ot)
    # with E containing every input, a single symbol never separates
    with pytest.raises(CounterexampleError):
        process_counterexample(ot, ("a",), mode, h)
    with pytest.raises(CounterexampleError):
        process_counterexample(ot, (), mode, h)


def test_wmethod_finds_m3(m3):
    h, m = learn(m3, m3.inputs, LearnerOptions(oracle=WMethodOracle(2)))
    assert equivalent(h, m3) is None
    assert m.rounds == 2 and not m.unverified
    assert m.eq_symbols > 0


def test_wmethod_suite_shape(m3):
    words = list(wmethod_suite(m3, 0))
    assert len(words) == len(set(words))
    W = characterizing_set(m3)
    assert len(words) <= len(m3.states) * len(m3.inputs) * len(W)
    assert characterizing_set(make_one_state()) == [()]


def test_random_oracle_unverified(one_state):
    opts = LearnerOptions(oracle=RandomWordsOracle(5, 1, 3, seed=1))
    h, m = learn(one_state, one_state.inputs, opts)
    assert m.unverified
    assert m.eq_symbols > 0 and m.resets == m.mq_count + 5


def test_random_oracle_finds_m3(m3):
    h, m = learn(m3, m3.inputs, LearnerOptions(oracle=RandomWordsOracle(200, 3, 8, seed=3)))
    assert equivalent(h, m3) is None


@pytest.mark.parametrize("text, expected", [
    ("perfect", PerfectOracle()),
    ("wmethod:2", WMethodOracle(2)),
    ("wmethod", WMethodOracle(1)),
    ("random:10,2,5,9", RandomWordsOracle(10, 2, 5, 9)),
    ("random:10,2,5", RandomWordsOracle(10, 2, 5, 0)),
])
def test_parse_oracle(text, expected):
    assert parse_oracle(text) == expected


@pytest.mark.parametrize("text", ["exhaustive", "wmethod:x", "random:1,5,2", "perfect:3"])
def test_parse_oracle_errors(text):
    with pytest.raises(ValueError):
        parse_oracle(text)


def test_bad_options():
    with pytest.raises(ValueError):
        LearnerOptions(ce_handling="suffix")
    with pytest.raises(ValueError):
        LearnerOptions(closing="random")


class FlakyTeacher(Teacher):
    """Answers membership queries from one machine and test runs from another."""

    def __init__(self, mq_machine, run_machine):
        self.mq_machine = mq_machine
        self.run_machine = run_machine

    def answer_mq(self, word):
        return self.mq_machine.last_output(word)

    def run(self, word):
        return self.run_machine.run(word)


def test_teacher_inconsistency_detected(m3):
    zero = make_one_state(("1", "1"))
    opts = LearnerOptions(oracle=WMethodOracle(1), cache=True)
    with pytest.raises(TeacherInconsistencyError):
        learn(FlakyTeacher(zero, m3), m3.inputs, opts)


def test_estimator_api(m3):
    est = LStarMealy()
    assert est.get_params() == {"oracle": "perfect", "ce_handling": ALL_PREFIXES,
                                "closing": CLOSE_FIRST, "cache": False}
    assert est.set_params(cache=True) is est and est.cache
    with pytest.raises(ValueError):
        est.set_params(depth=3)
    with pytest.raises(RuntimeError):
        est.predict([("a",)])
    est.fit(m3)
    assert est.predict([("a", "a", "a"), ()]) == [("0", "0", "1"), ()]
    assert est.metrics_.rounds == 2
    with pytest.raises(ValueError):
        LStarMealy().fit(FlakyTeacher(m3, m3))
    # a generic teacher has no perfect oracle, so test with the W-method
    fitted = LStarMealy(oracle="wmethod:2").fit(FlakyTeacher(m3, m3), inputs=m3.inputs)
    assert equivalent(fitted.model_, m3) is None


machines = st.builds(
    lambda seed, n, k, o: random_machine(rng(seed), n, ["a", "b", "c", "d"][:k], ["0", "1", "2"][:o]),
    st.integers(0, 2**32), st.integers(1, 12), st.integers(1, 3), st.integers(1, 3),
)
option_sets = st.builds(LearnerOptions, st.just(PerfectOracle()),
                        st.sampled_from([ALL_PREFIXES, RIVEST_SCHAPIRE]),
                        st.sampled_from([CLOSE_FIRST, CLOSE_SHORTEST]), st.booleans())


@settings(max_examples=60, deadline=None)
@given(machines, option_sets)
def test_learns_minimal_machine(m, opts):
    h, metrics = learn(m, m.inputs, opts)
    assert equivalent(h, m) is None
    assert len(h.states) == len(minimize(m).states)
    sizes = metrics.hypothesis_states
    assert all(x < y for x, y in zip(sizes, sizes[1:]))
    assert metrics.rounds == metrics.eq_count == len(sizes) == len(metrics.ce_lengths) + 1


@settings(max_examples=30, deadline=None)
@given(machines, option_sets)
def test_learning_is_deterministic(m, opts):
    h1, m1 = learn(m, m.inputs, opts)
    h2, m2 = learn(m, m.inputs, opts)
    assert h1 == h2 and m1 == m2


@settings(max_examples=40, deadline=None)
@given(machines, st.sampled_from([ALL_PREFIXES, RIVEST_SCHAPIRE]))
def test_cache_soundness(m, mode):
    off_h, off = learn(m, m.inputs, LearnerOptions(ce_handling=mode))
    on_h, on = learn(m, m.inputs, LearnerOptions(ce_handling=mode, cache=True))
    assert off_h == on_h and off.rounds == on.rounds
    assert on.mq_count <= off.mq_count


@settings(max_examples=40, deadline=None)
@given(machines, st.sampled_from([ALL_PREFIXES, RIVEST_SCHAPIRE]))
def test_table_closure_invariants(m, mode):
    teacher = MachineTeacher(m)
    ot = ObservationTable.initial(m.inputs, teacher.answer_mq)
    while True:
        close_and_consist(ot)
        h = build_hypothesis(ot)
        ce = teacher.answer_eq(h)
        if ce is None:
            break
        process_counterexample(ot, ce, mode, h)
    pset = set(ot.prefixes)
    assert all(s[:-1] in pset for s in ot.prefixes if s)
    eset = set(ot.suffixes)
    assert all(len(e) == 1 or e[1:] in eset for e in ot.suffixes)


@settings(max_examples=40, deadline=None)
@given(machines)
def test_initial_query_count(m):
    mqs = []
    teacher = MachineTeacher(m)
    ObservationTable.initial(m.inputs, lambda w: mqs.append(w) or teacher.answer_mq(w))
    k = len(m.inputs)
    assert len(mqs) == (1 + k) * k


def test_learn_rejects_empty_alphabet(m3):
    with pytest.raises(ValueError):
        learn(m3, [])


def test_make_m3_is_fixture(m3):
    assert m3 == make_m3()
