"""Deterministic complete Mealy machines."""

from __future__ import annotations

import re
import warnings
from collections import deque
from typing import Mapping, Sequence

from . import dot
from .errors import DotFormatError


class UnreachableStateWarning(UserWarning):
    pass


class MealyMachine:
    """Complete deterministic Mealy machine.

    ``transitions`` maps ``(state, input)`` to ``(target, output)`` and must
    be total over ``states x inputs``. Instances are treated as immutable.
    """

    __slots__ = ("states", "initial", "inputs", "outputs", "transitions",
                 "_sidx", "_iidx", "_delta", "_lam")

    def __init__(self, states: Sequence[str], initial: str, inputs: Sequence[str],
                 outputs: Sequence[str], transitions: Mapping[tuple, tuple]):
        self.states = tuple(states)
        self.initial = initial
        self.inputs = tuple(inputs)
        self.transitions = dict(transitions)
        outs = list(outputs)
        for _, o in self.transitions.values():
            if o not in outs:
                outs.append(o)
        self.outputs = tuple(outs)
        if not self.inputs:
            raise ValueError("input alphabet is empty")
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state name")
        if len(set(self.inputs)) != len(self.inputs):
            raise ValueError("duplicate input symbol")
        if initial not in self.states:
            raise ValueError(f"initial state {initial} is not a state")
        self._sidx = {s: i for i, s in enumerate(self.states)}
        self._iidx = {a: j for j, a in enumerate(self.inputs)}
        self._delta = []
        self._lam = []
        for s in self.states:
            drow, lrow = [], []
            for a in self.inputs:
                try:
                    t, o = self.transitions[(s, a)]
                except KeyError:
                    raise ValueError(f"incomplete machine: no transition for ({s}, {a})") from None
                if t not in self._sidx:
                    raise ValueError(f"transition ({s}, {a}) targets unknown state {t}")
                drow.append(self._sidx[t])
                lrow.append(o)
            self._delta.append(drow)
            self._lam.append(lrow)
        if len(self.transitions) != len(self.states) * len(self.inputs):
            raise ValueError("transition map mentions unknown states or inputs")

    def __repr__(self):
        return f"<MealyMachine {len(self.states)} states, inputs={list(self.inputs)}>"

    def __eq__(self, other):
        if not isinstance(other, MealyMachine):
            return NotImplemented
        return (self.states == other.states and self.initial == other.initial
                and self.inputs == other.inputs and self.transitions == other.transitions)

    def __hash__(self):
        return hash((self.states, self.initial, self.inputs))

    def __len__(self):
        return len(self.states)

    def step(self, state, symbol):
        """``(next_state, output)`` for one input symbol."""
        return self.transitions[(state, symbol)]

    def _input_indices(self, word):
        try:
            return [self._iidx[a] for a in word]
        except KeyError as exc:
            raise ValueError(f"symbol {exc.args[0]!r} not in input alphabet") from None

    def run(self, word) -> tuple:
        q = self._sidx[self.initial]
        out = []
        for j in self._input_indices(word):
            out.append(self._lam[q][j])
            q = self._delta[q][j]
        return tuple(out)

    def last_output(self, word):
        if len(word) == 0:
            raise ValueError("last_output of the empty word")
        q = self._sidx[self.initial]
        idx = self._input_indices(word)
        for j in idx[:-1]:
            q = self._delta[q][j]
        return self._lam[q][idx[-1]]

    def state_after(self, word, start=None):
        q = self._sidx[self.initial if start is None else start]
        for j in self._input_indices(word):
            q = self._delta[q][j]
        return self.states[q]

    def bfs_order(self) -> list:
        """Reachable states in breadth-first order (inputs in alphabet order)."""
        start = self._sidx[self.initial]
        seen = {start}
        order = [start]
        queue = deque([start])
        while queue:
            q = queue.popleft()
            for t in self._delta[q]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return [self.states[q] for q in order]

    def access_words(self) -> dict:
        """Shortest (then alphabet-lexicographic) access word of each reachable state."""
        words = {self.initial: ()}
        queue = deque([self.initial])
        while queue:
            s = queue.popleft()
            for a in self.inputs:
                t = self.transitions[(s, a)][0]
                if t not in words:
                    words[t] = words[s] + (a,)
                    queue.append(t)
        return words

    def signature(self, state) -> tuple:
        """One-step output row of ``state``."""
        return tuple(self._lam[self._sidx[state]])


def canonical(m: MealyMachine, prefix="s") -> MealyMachine:
    """Reachable part of ``m`` with states renamed ``s0..`` in BFS order."""
    order = m.bfs_order()
    names = {s: f"{prefix}{i}" for i, s in enumerate(order)}
    trans = {}
    for s in order:
        for a in m.inputs:
            t, o = m.transitions[(s, a)]
            trans[(names[s], a)] = (names[t], o)
    return MealyMachine([names[s] for s in order], names[m.initial], m.inputs, m.outputs, trans)


def partition(m: MealyMachine, states=None) -> dict:
    """Map each state to its equivalence-class number (Moore refinement)."""
    states = list(m.states if states is None else states)
    block = {}
    sigs = {}
    for s in states:
        block[s] = sigs.setdefault(m.signature(s), len(sigs))
    count = len(sigs)
    while True:
        new = {}
        keys = {}
        for s in states:
            key = (block[s],) + tuple(block[m.transitions[(s, a)][0]] for a in m.inputs)
            new[s] = keys.setdefault(key, len(keys))
        if len(keys) == count:
            return new
        block, count = new, len(keys)


def minimize(m: MealyMachine) -> MealyMachine:
    """Minimal machine equivalent to ``m``, states named ``s0..`` in BFS order."""
    reach = m.bfs_order()
    block = partition(m, reach)
    rep = {}
    for s in reach:
        rep.setdefault(block[s], s)
    trans = {}
    for b, s in rep.items():
        for a in m.inputs:
            t, o = m.transitions[(s, a)]
            trans[(f"b{b}", a)] = (f"b{block[t]}", o)
    quotient = MealyMachine([f"b{b}" for b in rep], f"b{block[m.initial]}",
                            m.inputs, m.outputs, trans)
    return canonical(quotient)


def equivalent(m1: MealyMachine, m2: MealyMachine, start1=None, start2=None):
    """``None`` when the machines agree on every word, else a shortest separating word.

    Breadth-first search over the product machine; ties resolve by the input
    order of ``m1``.
    """
    if set(m1.inputs) != set(m2.inputs):
        raise ValueError("alphabet mismatch between machines")
    inputs = m1.inputs
    j2 = [m2._iidx[a] for a in inputs]
    start = (m1._sidx[m1.initial if start1 is None else start1],
             m2._sidx[m2.initial if start2 is None else start2])
    parent = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        p, q = pair
        for j, a in enumerate(inputs):
            if m1._lam[p][j] != m2._lam[q][j2[j]]:
                word = [a]
                node = pair
                while parent[node] is not None:
                    node, sym = parent[node]
                    word.append(sym)
                return tuple(reversed(word))
            nxt = (m1._delta[p][j], m2._delta[q][j2[j]])
            if nxt not in parent:
                parent[nxt] = (pair, a)
                queue.append(nxt)
    return None


def distinguishing_word(m: MealyMachine, s1, s2):
    """Shortest word whose output differs between states ``s1`` and ``s2`` of ``m``."""
    return equivalent(m, m, s1, s2)


# ---------------------------------------------------------------------------
# dot

_LABEL_RE = re.compile(r"^\s*(.*?)\s*/\s*(.*?)\s*$", re.DOTALL)


def split_label(label, where):
    m = _LABEL_RE.match(label)
    if not m or not m.group(1) or not m.group(2) or "/" in m.group(2):
        raise DotFormatError(f"edge label {label!r} is not of the form 'input / output'", where)
    return m.group(1), m.group(2)


def read_graph(text):
    """Common dot reading: returns (states, initial, edges) without start markers."""
    nodes, edges = dot.parse_graph(text)
    markers = {n for n, attrs in nodes.items() if dot.is_start_marker(n, attrs)}
    for src, _, _, _ in edges:
        if src not in nodes and src.startswith("__start"):
            markers.add(src)
    states = [n for n in nodes if n not in markers]
    initial = None
    real_edges = []
    for src, dst, attrs, line in edges:
        if src in markers:
            if dst not in nodes or dst in markers:
                raise DotFormatError(f"unknown node {dst} in edge", f"line {line}")
            if initial is None:
                initial = dst
            continue
        for n in (src, dst):
            if n not in nodes:
                raise DotFormatError(f"unknown node {n} in edge", f"line {line}")
        real_edges.append((src, dst, attrs, line))
    if initial is None:
        if not states:
            raise DotFormatError("missing initial marker and no state nodes", "graph")
        initial = states[0]
    return nodes, states, initial, real_edges


def parse_dot(text: str) -> MealyMachine:
    _, states, initial, edges = read_graph(text)
    inputs, outputs, trans = [], [], {}
    for src, dst, attrs, line in edges:
        if "label" not in attrs:
            raise DotFormatError(f"edge {src} -> {dst} has no label", f"line {line}")
        a, o = split_label(attrs["label"], f"line {line}")
        if (src, a) in trans:
            raise DotFormatError(f"nondeterminism at ({src}, {a})", f"line {line}")
        trans[(src, a)] = (dst, o)
        if a not in inputs:
            inputs.append(a)
        if o not in outputs:
            outputs.append(o)
    for s in states:
        for a in inputs:
            if (s, a) not in trans:
                raise DotFormatError(f"incomplete machine: no transition for ({s}, {a})", s)
    m = MealyMachine(states, initial, inputs, outputs, trans)
    unreachable = [s for s in states if s not in set(m.bfs_order())]
    if unreachable:
        warnings.warn(f"unreachable states: {', '.join(unreachable)}", UnreachableStateWarning,
                      stacklevel=2)
    return m


def write_dot(m: MealyMachine) -> str:
    order = m.bfs_order()
    reached = set(order)
    order += [s for s in m.states if s not in reached]
    q = dot.quote
    lines = [
        "digraph fsm {",
        '  __start0 [shape=none label=""]',
        f"  __start0 -> {q(m.initial)}",
    ]
    for s in order:
        lines.append(f'  {q(s)} [shape=circle label="{s}"]')
    for s in order:
        for a in m.inputs:
            t, o = m.transitions[(s, a)]
            lines.append(f'  {q(s)} -> {q(t)} [label="{a} / {o}"]')
    lines.append("}")
    return "\n".join(lines) + "\n"
