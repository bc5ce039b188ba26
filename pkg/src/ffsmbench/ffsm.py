"""Featured finite state machines and product derivation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from . import dot
from .errors import DerivationError, DotFormatError, InvalidConfigurationError, ParseError
from .feature_model import (
    TRUE,
    Configuration,
    FeatureModel,
    configuration_violations,
    enumerate_configurations,
    parse_constraint,
    to_text,
)
from .mealy import MealyMachine, canonical, read_graph, split_label


class Transition(NamedTuple):
    source: str
    input: str
    guard: object
    output: str
    target: str


@dataclass(frozen=True)
class FFSM:
    """Conditional states and guarded transitions over a feature model.

    ``states`` lists ``(name, condition)`` pairs in declaration order; the
    initial state's condition must be literal ``true``.
    """

    feature_model: FeatureModel
    states: tuple
    initial: str
    inputs: tuple
    outputs: tuple
    transitions: tuple

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "transitions", tuple(Transition(*t) for t in self.transitions))
        names = [s for s, _ in self.states]
        if len(set(names)) != len(names):
            raise ValueError("duplicate conditional state")
        cond = dict(self.states)
        if self.initial not in cond:
            raise ValueError(f"initial state {self.initial} is not declared")
        if cond[self.initial] != TRUE:
            raise ValueError("initial state condition must be true")
        features = set(self.feature_model.features)
        for name, c in self.states:
            unknown = c.names() - features
            if unknown:
                raise ValueError(f"state {name}: unknown feature {sorted(unknown)[0]}")
        for t in self.transitions:
            if t.source not in cond or t.target not in cond:
                raise ValueError(f"transition {t.source} -> {t.target} uses an undeclared state")
            if t.input not in self.inputs:
                raise ValueError(f"input {t.input} not in alphabet")
            if t.output not in self.outputs:
                raise ValueError(f"output {t.output} not in alphabet")
            unknown = t.guard.names() - features
            if unknown:
                raise ValueError(f"guard on {t.source}/{t.input}: unknown feature {sorted(unknown)[0]}")

    @property
    def conditions(self) -> dict:
        return dict(self.states)


def ffsm_size(f: FFSM) -> tuple:
    """``(number of conditional states, number of conditional transitions)``."""
    return len(f.states), len(f.transitions)


def _project(f: FFSM, config: Configuration):
    sel = config.selected
    active = {s for s, c in f.states if c.evaluate(sel)}
    out = {}
    for t in f.transitions:
        if t.source in active and t.target in active and t.guard.evaluate(sel):
            out.setdefault((t.source, t.input), []).append(t)
    # breadth-first over enabled transitions, inputs in alphabet order
    order = [f.initial]
    seen = {f.initial}
    queue = deque(order)
    while queue:
        s = queue.popleft()
        for a in f.inputs:
            for t in out.get((s, a), ()):
                if t.target not in seen:
                    seen.add(t.target)
                    order.append(t.target)
                    queue.append(t.target)
    problems = []
    for s in order:
        for a in f.inputs:
            n = len(out.get((s, a), ()))
            if n == 0:
                problems.append(("missing", s, a))
            elif n > 1:
                problems.append(("conflict", s, a))
    unreachable = [s for s, _ in f.states if s in active and s not in seen]
    return order, out, problems, unreachable


def derive_product(f: FFSM, config: Configuration) -> MealyMachine:
    """Project ``f`` onto the product selected by ``config``.

    Raises ``InvalidConfigurationError`` for configurations outside the
    feature model and ``DerivationError`` when the reachable projection is
    not complete and deterministic.
    """
    violations = configuration_violations(f.feature_model, config)
    if violations:
        raise InvalidConfigurationError("invalid configuration: " + "; ".join(violations))
    order, out, problems, _ = _project(f, config)
    if problems:
        detail = ", ".join(f"{kind} ({s}, {a})" for kind, s, a in problems)
        label = f.feature_model.label(config)
        raise DerivationError(f"product {{{label}}} is not a complete deterministic machine: {detail}",
                              problems, config)
    trans = {}
    for s in order:
        for a in f.inputs:
            t = out[(s, a)][0]
            trans[(s, a)] = (t.target, t.output)
    m = MealyMachine(order, f.initial, f.inputs, f.outputs, trans)
    return canonical(m)


@dataclass
class ProductFindings:
    configuration: Configuration
    missing: list = field(default_factory=list)
    conflicting: list = field(default_factory=list)
    dangling: list = field(default_factory=list)
    unreachable: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.missing or self.conflicting or self.dangling)


@dataclass
class ValidationReport:
    """Per-configuration findings of ``validate_ffsm``.

    ``missing`` and ``conflicting`` hold ``(state, input)`` pairs,
    ``dangling`` holds transitions enabled while an endpoint's condition is
    false. Unreachable active states are informational and never fail.
    """

    products: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.ok for p in self.products)

    def failures(self):
        return [p for p in self.products if not p.ok]

    def to_dict(self, fm: FeatureModel):
        return {
            "pass": self.passed,
            "configurations": len(self.products),
            "products": [
                {
                    "configuration": [x for x in fm.features if x in p.configuration.selected],
                    "missing": [list(x) for x in p.missing],
                    "conflicting": [list(x) for x in p.conflicting],
                    "dangling": [list(x) for x in p.dangling],
                    "unreachable": list(p.unreachable),
                }
                for p in self.products
            ],
        }


def validate_ffsm(f: FFSM, limit: int = 10_000, configs=None) -> ValidationReport:
    """Derive every valid product and collect what goes wrong."""
    if configs is None:
        configs = enumerate_configurations(f.feature_model, limit)
    cond = f.conditions
    report = ValidationReport()
    for config in configs:
        _, _, problems, unreachable = _project(f, config)
        pf = ProductFindings(config, unreachable=unreachable)
        for kind, s, a in problems:
            (pf.missing if kind == "missing" else pf.conflicting).append((s, a))
        sel = config.selected
        for t in f.transitions:
            if t.guard.evaluate(sel) and not (cond[t.source].evaluate(sel) and cond[t.target].evaluate(sel)):
                pf.dangling.append((t.source, t.input, to_text(t.guard), t.target))
        report.products.append(pf)
    return report


# ---------------------------------------------------------------------------
# dot


def _split_pc(text, where):
    if "@" in text:
        head, _, pc = text.partition("@")
        try:
            return head.strip(), parse_constraint(pc.strip())
        except ParseError as exc:
            raise DotFormatError(f"bad presence condition {pc.strip()!r}: {exc}", where) from None
    return text.strip(), TRUE


def parse_ffsm_dot(text: str, fm: FeatureModel) -> FFSM:
    nodes, states, initial, edges = read_graph(text)
    known = set(fm.features)

    def check(expr, where):
        unknown = sorted(expr.names() - known)
        if unknown:
            raise DotFormatError(f"unknown feature {unknown[0]} in presence condition", where)
        return expr

    cond_states = []
    for s in states:
        label = nodes[s].get("label", s)
        name, pc = _split_pc(label, f"node {s}")
        if name and name != s:
            raise DotFormatError(f"node label {label!r} does not name node {s}", f"node {s}")
        cond_states.append((s, check(pc, f"node {s}")))
    inputs, outputs, trans = [], [], []
    for src, dst, attrs, line in edges:
        where = f"line {line}"
        if "label" not in attrs:
            raise DotFormatError(f"edge {src} -> {dst} has no label", where)
        left, out = split_label(attrs["label"], where)
        a, guard = _split_pc(left, where)
        trans.append(Transition(src, a, check(guard, where), out, dst))
        if a not in inputs:
            inputs.append(a)
        if out not in outputs:
            outputs.append(out)
    try:
        return FFSM(fm, tuple(cond_states), initial, tuple(inputs), tuple(outputs), tuple(trans))
    except ValueError as exc:
        raise DotFormatError(str(exc), "graph") from None


def write_ffsm_dot(f: FFSM) -> str:
    q = dot.quote
    order = {s: i for i, (s, _) in enumerate(f.states)}
    iidx = {a: j for j, a in enumerate(f.inputs)}
    lines = [
        "digraph fsm {",
        '  __start0 [shape=none label=""]',
        f"  __start0 -> {q(f.initial)}",
    ]
    for s, c in f.states:
        label = s if c == TRUE else f"{s} @ {to_text(c)}"
        lines.append(f'  {q(s)} [shape=circle label="{label}"]')
    for t in sorted(f.transitions, key=lambda t: (order[t.source], iidx[t.input], to_text(t.guard))):
        head = t.input if t.guard == TRUE else f"{t.input} @ {to_text(t.guard)}"
        lines.append(f'  {q(t.source)} -> {q(t.target)} [label="{head} / {t.output}"]')
    lines.append("}")
    return "\n".join(lines) + "\n"
