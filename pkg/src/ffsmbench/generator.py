"""Seeded synthesis of random FFSMs and product families."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GenerationError
from .feature_model import (
    TRUE,
    FeatureModel,
    Var,
    conjoin,
    enumerate_configurations,
    negate,
    truth_mask,
)
from .ffsm import FFSM, Transition, derive_product, validate_ffsm
from .learner import LearnerOptions, learn
from .rng import SplitMix64

MAX_ATTEMPTS = 32
GADGET_STATES = 3


@dataclass(frozen=True)
class GenSpec:
    feature_model: FeatureModel
    seed: int
    n_states: int
    inputs: tuple
    outputs: tuple
    variability_degree: float = 0.3
    state_pc_probability: float = 0.2
    ensure_multiround: bool = True
    config_limit: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")
        if not self.inputs:
            raise ValueError("at least one input symbol is required")
        if not self.outputs:
            raise ValueError("at least one output symbol is required")
        if self.ensure_multiround and len(self.outputs) < 2:
            raise ValueError("ensure_multiround needs at least two output symbols")
        if len(set(self.inputs)) != len(self.inputs) or len(set(self.outputs)) != len(self.outputs):
            raise ValueError("alphabets must not repeat symbols")
        for name in ("variability_degree", "state_pc_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def guard_families(fm: FeatureModel, configs) -> list:
    """Exclusive, exhaustive guard families that actually vary over ``configs``.

    Optional features and or-group members give ``{f, !f}``; alternative
    groups give one guard per member. Families that do not partition the
    valid configurations (e.g. because of cross-tree constraints) are dropped.
    """
    full = (1 << len(configs)) - 1
    candidates = []
    for f in fm.optional_features():
        candidates.append((Var(f), negate(Var(f))))
    for kind, _, members in fm.groups():
        if kind == "alt":
            candidates.append(tuple(Var(m) for m in members))
        else:
            candidates.extend((Var(m), negate(Var(m))) for m in members)
    families = []
    for fam in candidates:
        masks = [truth_mask(g, configs) for g in fam]
        union = 0
        disjoint = True
        for mk in masks:
            if union & mk:
                disjoint = False
            union |= mk
        if disjoint and union == full and sum(1 for mk in masks if mk) >= 2:
            families.append(tuple(g for g, mk in zip(fam, masks) if mk))
    return families


class _Builder:
    """Mutable scratch FFSM used while generating."""

    def __init__(self, spec, configs, rng):
        self.spec = spec
        self.configs = configs
        self.rng = rng
        self.full = (1 << len(configs)) - 1
        self._masks = {}
        self.names = [f"s{i}" for i in range(spec.n_states)]
        self.conditions = {n: TRUE for n in self.names}
        self.transitions = []

    def mask(self, expr):
        if expr not in self._masks:
            self._masks[expr] = truth_mask(expr, self.configs)
        return self._masks[expr]

    def narrow(self, guard, cond):
        """``guard && cond``, skipping the conjunction when it changes nothing."""
        gm = self.mask(guard)
        if gm & self.mask(cond) == gm:
            return guard
        return conjoin(guard, cond)

    def base_machine(self):
        rng, spec = self.rng, self.spec
        n, inputs = spec.n_states, spec.inputs
        table = {}
        for i in range(n):
            for a in inputs:
                table[(i, a)] = [rng.below(n), rng.choice(spec.outputs)]
        while True:
            reach, tree_edges = self._bfs(table)
            missing = [q for q in range(n) if q not in reach]
            if not missing:
                break
            candidates = [(q, a) for q in sorted(reach) for a in inputs if (q, a) not in tree_edges]
            slot = rng.choice(candidates)
            table[slot][0] = missing[0]
        for i in range(n):
            for a in inputs:
                t, o = table[(i, a)]
                self.transitions.append(Transition(f"s{i}", a, TRUE, o, f"s{t}"))

    def _bfs(self, table):
        reach = {0}
        order = [0]
        tree_edges = set()
        for q in order:
            for a in self.spec.inputs:
                t = table[(q, a)][0]
                if t not in reach:
                    reach.add(t)
                    order.append(t)
                    tree_edges.add((q, a))
        return reach, tree_edges

    def add_variants(self, families):
        spec, rng = self.spec, self.rng
        if not families:
            return
        slots = list(range(len(self.transitions)))
        k = round(spec.variability_degree * len(slots))
        chosen = sorted(rng.sample(slots, k))
        replaced = {}
        for idx in chosen:
            base = self.transitions[idx]
            fam = rng.choice(families)
            variants = []
            keep = rng.below(len(fam))
            for j, g in enumerate(fam):
                if j == keep:
                    variants.append(base._replace(guard=g))
                else:
                    variants.append(base._replace(
                        guard=g,
                        output=rng.choice(spec.outputs),
                        target=rng.choice(self.names),
                    ))
            replaced[idx] = variants
        out = []
        for idx, t in enumerate(self.transitions):
            out.extend(replaced.get(idx, [t]))
        self.transitions = out

    def add_state_conditions(self, families):
        spec, rng = self.spec, self.rng
        candidates = self.names[1:]
        if not families or not candidates:
            return
        k = round(spec.state_pc_probability * len(candidates))
        for name in sorted(rng.sample(candidates, k), key=self.names.index):
            fam = rng.choice(families)
            self.conditions[name] = rng.choice(fam)
        self.restrict_to_conditions(self.names[0])

    def restrict_to_conditions(self, fallback):
        """Make every guard imply its endpoints' conditions.

        Outgoing guards are conjoined with the source condition; incoming
        transitions are split so that excluded configurations go to
        ``fallback`` (whose condition must be true).
        """
        out = []
        for t in self.transitions:
            guard = self.narrow(t.guard, self.conditions[t.source])
            if self.mask(guard) == 0:
                continue
            cond = self.conditions[t.target]
            gm, cm = self.mask(guard), self.mask(cond)
            if gm & cm == gm:
                out.append(t._replace(guard=guard))
            elif gm & cm == 0:
                out.append(t._replace(guard=guard, target=fallback))
            else:
                out.append(t._replace(guard=conjoin(guard, cond)))
                out.append(t._replace(guard=conjoin(guard, negate(cond)), target=fallback))
        self.transitions = out

    def add_gadget(self, families):
        """Splice in a three-state cycle whose first two states look alike for one step."""
        spec, rng = self.spec, self.rng
        varying = [g for fam in families for g in fam]
        cond = rng.choice(varying) if varying else TRUE
        entry_input = rng.choice(spec.inputs)
        trigger = spec.inputs[0]
        low, high = spec.outputs[0], spec.outputs[1]
        n = len(self.names)
        g = [f"s{n + i}" for i in range(GADGET_STATES)]
        for name in g:
            self.names.append(name)
            self.conditions[name] = cond
        entry = self.names[0]
        rewired = []
        for t in self.transitions:
            if t.source == entry and t.input == entry_input:
                inside = self.narrow(t.guard, cond)
                outside = self.narrow(t.guard, negate(cond))
                if self.mask(inside):
                    rewired.append(t._replace(guard=inside, target=g[0]))
                if self.mask(outside):
                    rewired.append(t._replace(guard=outside))
            else:
                rewired.append(t)
        for i, name in enumerate(g):
            for a in spec.inputs:
                if a == trigger:
                    target = g[(i + 1) % GADGET_STATES]
                    output = high if i == GADGET_STATES - 1 else low
                else:
                    target, output = name, low
                rewired.append(Transition(name, a, cond, output, target))
        self.transitions = rewired

    def build(self):
        states = tuple((n, self.conditions[n]) for n in self.names)
        return FFSM(self.spec.feature_model, states, self.names[0], self.spec.inputs,
                    self.spec.outputs, tuple(self.transitions))


REFERENCE_OPTIONS = LearnerOptions()


def _multiround(f: FFSM, configs) -> bool:
    for c in configs:
        m = derive_product(f, c)
        _, metrics = learn(m, m.inputs, REFERENCE_OPTIONS)
        if metrics.rounds >= 2:
            return True
    return False


def generate_ffsm(spec: GenSpec) -> FFSM:
    """Random FFSM fully determined by ``spec``."""
    configs = enumerate_configurations(spec.feature_model, spec.config_limit)
    if not configs:
        raise GenerationError("feature model has no valid configuration")
    families = guard_families(spec.feature_model, configs)
    rng = SplitMix64(spec.seed)
    last_problem = None
    for _ in range(MAX_ATTEMPTS):
        b = _Builder(spec, configs, rng)
        b.base_machine()
        b.add_variants(families)
        b.add_state_conditions(families)
        f = b.build()
        report = validate_ffsm(f, configs=configs)
        if not report.passed:
            last_problem = report.failures()[0]
            continue
        if spec.ensure_multiround and not _multiround(f, configs):
            b.add_gadget(families)
            f = b.build()
            report = validate_ffsm(f, configs=configs)
            if not report.passed:
                last_problem = report.failures()[0]
                continue
            if not _multiround(f, configs):
                last_problem = "no product needs more than one round"
                continue
        return f
    raise GenerationError(f"generation failed after {MAX_ATTEMPTS} attempts; last problem: {last_problem}")


def generate_family(spec: GenSpec) -> dict:
    """``{configuration: product machine}`` in configuration order."""
    f = generate_ffsm(spec)
    configs = enumerate_configurations(spec.feature_model, spec.config_limit)
    return {c: derive_product(f, c) for c in configs}
