"""Benchmark orchestration, family-level metrics and round analysis."""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import BenchError
from .feature_model import Configuration, enumerate_configurations
from .ffsm import FFSM, derive_product, ffsm_size
from .learner import LearnerOptions, PerfectOracle, RandomWordsOracle, learn
from .mealy import MealyMachine, distinguishing_word, equivalent, minimize, parse_dot
from .rng import derive_seed

FLOAT_DIGITS = 6
COUNTERS = ("rounds", "eq_count", "mq_count", "mq_symbols", "eq_symbols", "resets")


def _version():
    from . import __version__

    return __version__


# ---------------------------------------------------------------------------
# family metrics


@dataclass
class Conciseness:
    ratio: float
    cond_states: int
    sum_product_states: int


def conciseness(f: FFSM, limit: int = 10_000) -> Conciseness:
    """Conditional-state count over the summed minimal product sizes."""
    configs = enumerate_configurations(f.feature_model, limit)
    total = sum(len(minimize(derive_product(f, c)).states) for c in configs)
    states, _ = ffsm_size(f)
    return Conciseness(states / total, states, total)


@dataclass
class Accuracy:
    fraction: float
    failures: list = field(default_factory=list)


def accuracy(reference: FFSM, candidate: FFSM, limit: int = 10_000) -> Accuracy:
    """Share of configurations whose candidate product matches the reference.

    ``failures`` lists ``(configuration, counterexample or None, reason)``.
    """
    if set(reference.inputs) != set(candidate.inputs):
        raise ValueError("reference and candidate use different input alphabets")
    configs = enumerate_configurations(reference.feature_model, limit)
    failures = []
    for c in configs:
        try:
            ref = derive_product(reference, c)
            cand = derive_product(candidate, c)
        except BenchError as exc:
            failures.append((c, None, str(exc)))
            continue
        ce = equivalent(ref, cand)
        if ce is not None:
            failures.append((c, ce, "behaviour differs"))
    return Accuracy((len(configs) - len(failures)) / len(configs), failures)


# ---------------------------------------------------------------------------
# round analysis


@dataclass
class RoundAnalysis:
    rounds: int
    ce_lengths: list
    hypothesis_states: list
    merged_pairs: list
    one_step_signature_classes: int

    def to_dict(self):
        return {
            "rounds": self.rounds,
            "ce_lengths": list(self.ce_lengths),
            "hypothesis_states": list(self.hypothesis_states),
            "merged_pairs": [
                {"states": [a, b], "min_distinguishing_suffix_length": n}
                for a, b, n in self.merged_pairs
            ],
            "one_step_signature_classes": self.one_step_signature_classes,
        }


def analyze_rounds(m: MealyMachine, opts: LearnerOptions | None = None) -> RoundAnalysis:
    """Measure a learning run and list state pairs a one-step table cannot split.

    Pairs are reported with the names of the first state (breadth-first) of
    ``m`` in each equivalence class.
    """
    opts = opts or LearnerOptions()
    if not isinstance(opts.oracle, PerfectOracle):
        raise ValueError("round analysis needs the perfect oracle")
    _, metrics = learn(m, m.inputs, opts)
    mini = minimize(m)
    order = m.bfs_order()
    rep = {}
    for s in order:
        rep.setdefault(mini.state_after(m.access_words()[s]), s)
    pairs = []
    for a, b in itertools.combinations(mini.states, 2):
        if mini.signature(a) != mini.signature(b):
            continue
        w = distinguishing_word(mini, a, b)
        pairs.append((rep[a], rep[b], len(w)))
    classes = len({mini.signature(s) for s in mini.states})
    return RoundAnalysis(metrics.rounds, list(metrics.ce_lengths), list(metrics.hypothesis_states),
                         pairs, classes)


# ---------------------------------------------------------------------------
# benchmark


@dataclass
class ProductResult:
    index: int
    name: str
    configuration: list
    sul_states: int = 0
    learned_states: int = 0
    rounds: int = 0
    eq_count: int = 0
    mq_count: int = 0
    mq_symbols: int = 0
    eq_symbols: int = 0
    resets: int = 0
    equivalent: bool = False
    unverified: bool = False
    error: str | None = None

    def to_dict(self):
        return {
            "index": self.index,
            "name": self.name,
            "configuration": self.configuration,
            "sul_states": self.sul_states,
            "learned_states": self.learned_states,
            **{k: getattr(self, k) for k in COUNTERS},
            "equivalent": self.equivalent,
            "unverified": self.unverified,
            "error": self.error,
        }


@dataclass
class BenchReport:
    per_product: list
    family: dict
    provenance: dict
    errors: list = field(default_factory=list)

    def to_dict(self):
        return {
            "per_product": [p.to_dict() for p in self.per_product],
            "family": self.family,
            "provenance": self.provenance,
            "errors": list(self.errors),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["index", "name", "sul_states", "learned_states", *COUNTERS,
                "equivalent", "unverified", "error"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for p in self.per_product:
            d = p.to_dict()
            w.writerow(["" if d[c] is None else d[c] for c in cols])
        return buf.getvalue()


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, FLOAT_DIGITS)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed float precision."""
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


def _product_options(opts: LearnerOptions, index: int) -> LearnerOptions:
    if isinstance(opts.oracle, RandomWordsOracle):
        oracle = replace(opts.oracle, seed=derive_seed(opts.oracle.seed, index))
        return replace(opts, oracle=oracle)
    return opts


def _bench_one(index, name, features, make_machine, opts):
    res = ProductResult(index, name, features)
    try:
        m = make_machine()
        res.sul_states = len(minimize(m).states)
        learned, metrics = learn(m, m.inputs, _product_options(opts, index))
        res.learned_states = len(learned.states)
        for k in COUNTERS:
            setattr(res, k, getattr(metrics, k))
        res.unverified = metrics.unverified
        res.equivalent = equivalent(learned, m) is None
    except BenchError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def _run(tasks, opts, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_bench_one, *t, opts) for t in tasks]
            return [fut.result() for fut in futures]
    return [_bench_one(*t, opts) for t in tasks]


def _family(results, ffsm=None):
    ok = [r for r in results if r.error is None]
    fam = {
        "product_count": len(results),
        "sum_product_states": sum(r.sul_states for r in ok),
        "ffsm_cond_states": None,
        "ffsm_cond_transitions": None,
        "conciseness_ratio": None,
        "multiround_products": sum(1 for r in ok if r.rounds >= 2),
        "all_equivalent": all(r.equivalent for r in results),
        "totals": {k: sum(getattr(r, k) for r in ok) for k in COUNTERS},
    }
    if ffsm is not None:
        states, trans = ffsm_size(ffsm)
        fam["ffsm_cond_states"] = states
        fam["ffsm_cond_transitions"] = trans
        if fam["sum_product_states"]:
            fam["conciseness_ratio"] = states / fam["sum_product_states"]
    return fam


def _provenance(opts, extra=None):
    out = {"tool": "ffsmbench", "version": _version(), "options": opts.to_dict()}
    if isinstance(opts.oracle, RandomWordsOracle):
        out["seed"] = opts.oracle.seed
    out.update(extra or {})
    return out


def run_benchmark(ffsm: FFSM | None = None, products: dict | None = None,
                  opts: LearnerOptions | None = None, limit: int = 10_000, jobs: int = 1) -> BenchReport:
    """Learn every product of an FFSM, or every machine in ``products``.

    ``products`` maps a product name to a ``MealyMachine`` (or to a callable
    producing one). Failures are recorded per product; the run continues.
    """
    opts = opts or LearnerOptions()
    if (ffsm is None) == (products is None):
        raise ValueError("give exactly one of ffsm or products")
    if ffsm is not None:
        fm = ffsm.feature_model
        configs = enumerate_configurations(fm, limit)
        tasks = [
            (i, fm.label(c), [x for x in fm.features if x in c.selected],
             (lambda c=c: derive_product(ffsm, c)))
            for i, c in enumerate(configs)
        ]
    else:
        tasks = []
        for i, (name, m) in enumerate(products.items()):
            make = m if callable(m) else (lambda m=m: m)
            tasks.append((i, name, [], make))
    results = _run(tasks, opts, jobs)
    errors = [f"{r.name}: {r.error}" for r in results if r.error]
    return BenchReport(results, _family(results, ffsm), _provenance(opts), errors)


def load_products(directory) -> dict:
    """Product machines from every ``*.dot`` file of ``directory`` (sorted by name)."""
    out = {}
    for path in sorted(Path(directory).glob("*.dot")):
        out[path.stem] = (lambda p=path: parse_dot(p.read_text()))
    if not out:
        raise BenchError(f"no .dot files in {directory}")
    return out


def product_filename(index: int, fm, config: Configuration) -> str:
    return f"product_{index}_{fm.label(config)}.dot"
