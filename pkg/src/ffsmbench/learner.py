"""Instrumented L* for Mealy machines.

The learner keeps an observation table ``(S, E, T)``: ``S`` is a
prefix-closed list of access words, ``E`` a list of non-empty suffixes and
``T[s, e]`` the last output produced by the teacher on ``s . e``. Every
membership query, equivalence query and test execution is counted so that
runs can be compared by rounds, queries, symbols and resets.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .errors import CounterexampleError, TeacherInconsistencyError
from .mealy import MealyMachine, distinguishing_word, equivalent
from .rng import SplitMix64

ALL_PREFIXES = "all_prefixes"
RIVEST_SCHAPIRE = "rivest_schapire"
CLOSE_FIRST = "close_first"
CLOSE_SHORTEST = "close_shortest"


# ---------------------------------------------------------------------------
# options and metrics


@dataclass(frozen=True)
class PerfectOracle:
    def __str__(self):
        return "perfect"


@dataclass(frozen=True)
class WMethodOracle:
    depth: int = 1

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("W-method depth must be >= 0")

    def __str__(self):
        return f"wmethod:{self.depth}"


@dataclass(frozen=True)
class RandomWordsOracle:
    count: int
    min_len: int
    max_len: int
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("random oracle needs count >= 1")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError("random oracle needs 1 <= min_len <= max_len")

    def __str__(self):
        return f"random:{self.count},{self.min_len},{self.max_len},{self.seed}"


def parse_oracle(text: str):
    """``perfect``, ``wmethod:<depth>`` or ``random:<count>,<min>,<max>,<seed>``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "perfect" and not arg:
            return PerfectOracle()
        if kind == "wmethod":
            return WMethodOracle(int(arg) if arg else 1)
        if kind == "random":
            parts = [int(x) for x in arg.split(",")]
            if len(parts) == 3:
                parts.append(0)
            return RandomWordsOracle(*parts)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad oracle {text!r}: {exc}") from None
    raise ValueError(f"bad oracle {text!r}")


@dataclass(frozen=True)
class LearnerOptions:
    oracle: object = PerfectOracle()
    ce_handling: str = ALL_PREFIXES
    closing: str = CLOSE_FIRST
    cache: bool = False

    def __post_init__(self):
        if isinstance(self.oracle, str):
            object.__setattr__(self, "oracle", parse_oracle(self.oracle))
        if self.ce_handling not in (ALL_PREFIXES, RIVEST_SCHAPIRE):
            raise ValueError(f"unknown counterexample handling {self.ce_handling!r}")
        if self.closing not in (CLOSE_FIRST, CLOSE_SHORTEST):
            raise ValueError(f"unknown closing strategy {self.closing!r}")

    def to_dict(self):
        return {
            "oracle": str(self.oracle),
            "ce_handling": self.ce_handling,
            "closing": self.closing,
            "cache": self.cache,
        }


@dataclass
class LearnMetrics:
    rounds: int = 0
    eq_count: int = 0
    mq_count: int = 0
    mq_symbols: int = 0
    eq_symbols: int = 0
    resets: int = 0
    unverified: bool = False
    hypothesis_states: list = field(default_factory=list)
    ce_lengths: list = field(default_factory=list)

    def counters(self):
        d = asdict(self)
        del d["hypothesis_states"], d["ce_lengths"]
        return d


# ---------------------------------------------------------------------------
# teachers


class Teacher:
    """Answers membership and equivalence queries about one fixed system."""

    def answer_mq(self, word):
        raise NotImplementedError

    def run(self, word):
        """Full output word; used by test-based equivalence oracles."""
        return tuple(self.answer_mq(word[: i + 1]) for i in range(len(word)))

    def answer_eq(self, hypothesis):
        raise NotImplementedError


class MachineTeacher(Teacher):
    """Simulated system under learning backed by a known machine."""

    def __init__(self, machine: MealyMachine):
        self.machine = machine

    def answer_mq(self, word):
        return self.machine.last_output(word)

    def run(self, word):
        return self.machine.run(word)

    def answer_eq(self, hypothesis):
        return equivalent(hypothesis, self.machine)


class _Session:
    """Query plumbing shared by table and oracles; owns cache and counters."""

    def __init__(self, teacher, options, metrics):
        self.teacher = teacher
        self.options = options
        self.metrics = metrics
        self.cache = {} if options.cache else None
        oracle = options.oracle
        self.rng = SplitMix64(oracle.seed) if isinstance(oracle, RandomWordsOracle) else None

    def mq(self, word):
        word = tuple(word)
        if self.cache is not None and word in self.cache:
            return self.cache[word]
        self.metrics.mq_count += 1
        self.metrics.mq_symbols += len(word)
        self.metrics.resets += 1
        answer = self.teacher.answer_mq(word)
        if self.cache is not None:
            self.cache[word] = answer
        return answer

    def execute(self, word):
        self.metrics.eq_symbols += len(word)
        self.metrics.resets += 1
        outs = tuple(self.teacher.run(word))
        if self.cache is not None:
            for i in range(len(word)):
                cached = self.cache.get(word[: i + 1])
                if cached is not None and cached != outs[i]:
                    raise TeacherInconsistencyError(
                        f"teacher answered {outs[i]!r} for {word[: i + 1]!r}, earlier {cached!r}")
        return outs


# ---------------------------------------------------------------------------
# observation table


class ObservationTable:
    """L* table over rows ``S`` (prefixes) and ``S.I \\ S`` (boundary)."""

    def __init__(self, inputs: Sequence[str], query):
        self.inputs = tuple(inputs)
        self.query = query
        self._pos = {a: i for i, a in enumerate(self.inputs)}
        self.prefixes = []
        self.boundary = []
        self.suffixes = []
        self.cells = {}
        self._prefix_set = set()
        self._boundary_set = set()

    @classmethod
    def initial(cls, inputs, query):
        """Table with ``S = {eps}`` and ``E = I``, all cells filled."""
        ot = cls(inputs, query)
        ot.suffixes = [(a,) for a in ot.inputs]
        ot.add_prefix(())
        return ot

    def key(self, word):
        return len(word), tuple(self._pos[a] for a in word)

    def _fill(self, word):
        for e in self.suffixes:
            if (word, e) not in self.cells:
                self.cells[(word, e)] = self.query(word + e)

    def add_prefix(self, word):
        word = tuple(word)
        if word in self._prefix_set:
            return
        if word[:-1] not in self._prefix_set and word:
            raise ValueError("prefix set must stay prefix-closed")
        if word in self._boundary_set:
            self.boundary.remove(word)
            self._boundary_set.discard(word)
        self.prefixes.append(word)
        self._prefix_set.add(word)
        self._fill(word)
        for a in self.inputs:
            ext = word + (a,)
            if ext not in self._prefix_set and ext not in self._boundary_set:
                self.boundary.append(ext)
                self._boundary_set.add(ext)
                self._fill(ext)

    def add_suffix(self, suffix):
        suffix = tuple(suffix)
        if not suffix:
            raise ValueError("suffixes must be non-empty")
        if suffix in self.suffixes:
            return
        self.suffixes.append(suffix)
        for w in self.prefixes + self.boundary:
            self.cells[(w, suffix)] = self.query(w + suffix)

    def row(self, word):
        word = tuple(word)
        return tuple(self.cells[(word, e)] for e in self.suffixes)

    def find_inconsistency(self):
        """Suffix ``a.e`` exposing two equal S-rows with different successors, or None."""
        by_row = {}
        for s in sorted(self.prefixes, key=self.key):
            by_row.setdefault(self.row(s), []).append(s)
        for group in by_row.values():
            for s1, s2 in itertools.combinations(group, 2):
                for a in self.inputs:
                    for e in self.suffixes:
                        if self.cells[(s1 + (a,), e)] != self.cells[(s2 + (a,), e)]:
                            return (a,) + e
        return None

    def find_unclosed(self, closing=CLOSE_FIRST):
        """Boundary row whose content matches no S-row, or None."""
        known = {self.row(s) for s in self.prefixes}
        missing = [b for b in self.boundary if self.row(b) not in known]
        if not missing:
            return None
        if closing == CLOSE_SHORTEST:
            return min(missing, key=self.key)
        return missing[0]

    def is_closed(self):
        return self.find_unclosed() is None

    def is_consistent(self):
        return self.find_inconsistency() is None


def close_and_consist(ot: ObservationTable, closing=CLOSE_FIRST) -> ObservationTable:
    while True:
        suffix = ot.find_inconsistency()
        if suffix is not None:
            ot.add_suffix(suffix)
            continue
        row = ot.find_unclosed(closing)
        if row is not None:
            ot.add_prefix(row)
            continue
        return ot


def build_hypothesis(ot: ObservationTable) -> MealyMachine:
    if not ot.is_closed() or not ot.is_consistent():
        raise ValueError("hypothesis requires a closed and consistent table")
    names = {}
    reps = []
    for s in ot.prefixes:
        r = ot.row(s)
        if r not in names:
            names[r] = f"s{len(names)}"
            reps.append(s)
    trans = {}
    outputs = []
    for s in reps:
        for a in ot.inputs:
            out = ot.cells[(s, (a,))]
            trans[(names[ot.row(s)], a)] = (names[ot.row(s + (a,))], out)
            if out not in outputs:
                outputs.append(out)
    return MealyMachine(list(names.values()), names[ot.row(())], ot.inputs, outputs, trans)


def _access_in_table(ot):
    access = {}
    names = {}
    for s in ot.prefixes:
        r = ot.row(s)
        if r not in names:
            names[r] = f"s{len(names)}"
            access[names[r]] = s
    return access


def process_counterexample(ot: ObservationTable, ce, mode, hypothesis: MealyMachine) -> ObservationTable:
    """Refine ``ot`` with counterexample ``ce`` for ``hypothesis``."""
    ce = tuple(ce)
    if not ce:
        raise CounterexampleError("empty counterexample")
    predicted = hypothesis.last_output(ce)
    if mode == ALL_PREFIXES:
        for i in range(1, len(ce) + 1):
            ot.add_prefix(ce[:i])
        if ot.cells[(ce[:-1], ce[-1:])] == predicted:
            raise CounterexampleError(f"{ce!r} is not a counterexample")
        return ot
    if mode != RIVEST_SCHAPIRE:
        raise ValueError(f"unknown counterexample handling {mode!r}")
    access = _access_in_table(ot)
    m = len(ce)

    def probe(i):
        state = hypothesis.state_after(ce[:i])
        return ot.query(access[state] + ce[i:])

    if probe(0) == predicted:
        raise CounterexampleError(f"{ce!r} is not a counterexample")
    lo, hi = 0, m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid) == predicted:
            hi = mid
        else:
            lo = mid
    suffix = ce[lo + 1:]
    for i in range(len(suffix) - 1, -1, -1):
        ot.add_suffix(suffix[i:])
    return ot


# ---------------------------------------------------------------------------
# equivalence oracles


def characterizing_set(h: MealyMachine) -> list:
    """Words separating every pair of inequivalent states of ``h``."""
    W = []
    states = h.bfs_order()
    for s1, s2 in itertools.combinations(states, 2):
        if any(_run_from(h, s1, w) != _run_from(h, s2, w) for w in W):
            continue
        w = distinguishing_word(h, s1, s2)
        if w is not None:
            W.append(w)
    W.sort(key=lambda w: (len(w), [h.inputs.index(a) for a in w]))
    return W or [()]


def _run_from(h, state, word):
    out = []
    for a in word:
        state, o = h.transitions[(state, a)]
        out.append(o)
    return tuple(out)


def wmethod_suite(h: MealyMachine, depth: int):
    """Test words ``access(q) . a . m . w`` in deterministic order, duplicates dropped."""
    access = h.access_words()
    W = characterizing_set(h)
    middles = [()]
    for n in range(1, depth + 1):
        middles.extend(itertools.product(h.inputs, repeat=n))
    seen = set()
    for q in h.bfs_order():
        for a in h.inputs:
            for mid in middles:
                for w in W:
                    word = access[q] + (a,) + tuple(mid) + w
                    if word not in seen:
                        seen.add(word)
                        yield word


def _check(session, h, word):
    outs = session.execute(word)
    hyp = h.run(word)
    for i, (x, y) in enumerate(zip(outs, hyp)):
        if x != y:
            return word[: i + 1]
    return None


def oracle_wmethod(h: MealyMachine, session, depth: int):
    for word in wmethod_suite(h, depth):
        ce = _check(session, h, word)
        if ce is not None:
            return ce
    return None


def oracle_random(h: MealyMachine, session, spec: RandomWordsOracle):
    rng = session.rng
    for _ in range(spec.count):
        n = rng.randint(spec.min_len, spec.max_len)
        word = tuple(rng.choice(h.inputs) for _ in range(n))
        ce = _check(session, h, word)
        if ce is not None:
            return ce
    return None


def _equivalence_query(session, h):
    oracle = session.options.oracle
    if isinstance(oracle, PerfectOracle):
        return session.teacher.answer_eq(h)
    if isinstance(oracle, WMethodOracle):
        return oracle_wmethod(h, session, oracle.depth)
    if isinstance(oracle, RandomWordsOracle):
        ce = oracle_random(h, session, oracle)
        session.metrics.unverified = ce is None
        return ce
    raise TypeError(f"unknown oracle {oracle!r}")


def learn(teacher, inputs: Sequence[str], opts: Optional[LearnerOptions] = None):
    """Learn the teacher's machine; returns ``(hypothesis, metrics)``.

    ``teacher`` may also be a ``MealyMachine``, which is wrapped in a
    ``MachineTeacher``.
    """
    opts = opts or LearnerOptions()
    if isinstance(teacher, MealyMachine):
        teacher = MachineTeacher(teacher)
    if not inputs:
        raise ValueError("input alphabet is empty")
    metrics = LearnMetrics()
    session = _Session(teacher, opts, metrics)
    ot = ObservationTable.initial(inputs, session.mq)
    while True:
        close_and_consist(ot, opts.closing)
        h = build_hypothesis(ot)
        metrics.rounds += 1
        metrics.eq_count += 1
        metrics.hypothesis_states.append(len(h.states))
        ce = _equivalence_query(session, h)
        if ce is None:
            return h, metrics
        metrics.ce_lengths.append(len(ce))
        process_counterexample(ot, ce, opts.ce_handling, h)


class LStarMealy:
    """Estimator-style front end to :func:`learn`.

    ``fit`` takes a teacher (or a machine to simulate); ``predict`` maps
    input words to the learned machine's output words.
    """

    _param_names = ("oracle", "ce_handling", "closing", "cache")

    def __init__(self, oracle="perfect", ce_handling=ALL_PREFIXES, closing=CLOSE_FIRST, cache=False):
        self.oracle = oracle
        self.ce_handling = ce_handling
        self.closing = closing
        self.cache = cache

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self._param_names:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def fit(self, X, y=None, inputs=None):
        opts = LearnerOptions(self.oracle, self.ce_handling, self.closing, self.cache)
        if inputs is None:
            if not isinstance(X, (MealyMachine, MachineTeacher)):
                raise ValueError("inputs must be given for a generic teacher")
            inputs = (X if isinstance(X, MealyMachine) else X.machine).inputs
        self.model_, self.metrics_ = learn(X, inputs, opts)
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted yet; call fit first")
        return [self.model_.run(w) for w in X]
