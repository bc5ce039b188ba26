"""Feature models: FeatureIDE XML, presence-condition expressions, configurations.

A feature model is a tree of named features plus cross-tree constraints.
Every non-root feature is either a mandatory or optional child of an
``and`` node, or a member of the ``alt`` / ``or`` group formed by all
children of its parent.
"""

from __future__ import annotations

import itertools
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ConfigurationLimitExceeded, ConstraintSyntaxError, FeatureModelError

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# ---------------------------------------------------------------------------
# Expressions


class FeatureExpr:
    """Boolean expression over feature names."""

    precedence = 9

    def evaluate(self, selected) -> bool:
        raise NotImplementedError

    def names(self) -> frozenset:
        raise NotImplementedError

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(FeatureExpr):
    value: bool
    precedence = 9

    def evaluate(self, selected):
        return self.value

    def names(self):
        return frozenset()


@dataclass(frozen=True)
class Var(FeatureExpr):
    name: str
    precedence = 9

    def evaluate(self, selected):
        return self.name in selected

    def names(self):
        return frozenset((self.name,))


@dataclass(frozen=True)
class Not(FeatureExpr):
    operand: FeatureExpr
    precedence = 4

    def evaluate(self, selected):
        return not self.operand.evaluate(selected)

    def names(self):
        return self.operand.names()


@dataclass(frozen=True)
class And(FeatureExpr):
    operands: tuple
    precedence = 3

    def evaluate(self, selected):
        return all(op.evaluate(selected) for op in self.operands)

    def names(self):
        return frozenset().union(*(op.names() for op in self.operands))


@dataclass(frozen=True)
class Or(FeatureExpr):
    operands: tuple
    precedence = 2

    def evaluate(self, selected):
        return any(op.evaluate(selected) for op in self.operands)

    def names(self):
        return frozenset().union(*(op.names() for op in self.operands))


@dataclass(frozen=True)
class Implies(FeatureExpr):
    left: FeatureExpr
    right: FeatureExpr
    precedence = 1

    def evaluate(self, selected):
        return (not self.left.evaluate(selected)) or self.right.evaluate(selected)

    def names(self):
        return self.left.names() | self.right.names()


@dataclass(frozen=True)
class Equiv(FeatureExpr):
    left: FeatureExpr
    right: FeatureExpr
    precedence = 0

    def evaluate(self, selected):
        return self.left.evaluate(selected) == self.right.evaluate(selected)

    def names(self):
        return self.left.names() | self.right.names()


TRUE = Const(True)
FALSE = Const(False)


def conjoin(*exprs: FeatureExpr) -> FeatureExpr:
    """AND of ``exprs`` with literal ``true`` operands dropped."""
    ops = [e for e in exprs if e != TRUE]
    if any(e == FALSE for e in ops):
        return FALSE
    if not ops:
        return TRUE
    if len(ops) == 1:
        return ops[0]
    return And(tuple(ops))


def negate(expr: FeatureExpr) -> FeatureExpr:
    if isinstance(expr, Const):
        return Const(not expr.value)
    if isinstance(expr, Not):
        return expr.operand
    return Not(expr)


def to_text(expr: FeatureExpr) -> str:
    """Render ``expr`` in the textual constraint grammar.

    Nested operators of equal precedence are parenthesized so that
    ``parse_constraint(to_text(e)) == e`` for every expression tree.
    """
    if isinstance(expr, Const):
        return "true" if expr.value else "false"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Not):
        inner = to_text(expr.operand)
        if expr.operand.precedence < Not.precedence:
            inner = f"({inner})"
        return "!" + inner

    def wrap(child):
        text = to_text(child)
        return f"({text})" if child.precedence <= expr.precedence else text

    if isinstance(expr, And):
        return " && ".join(wrap(op) for op in expr.operands)
    if isinstance(expr, Or):
        return " || ".join(wrap(op) for op in expr.operands)
    if isinstance(expr, Implies):
        return f"{wrap(expr.left)} -> {wrap(expr.right)}"
    if isinstance(expr, Equiv):
        return f"{wrap(expr.left)} <-> {wrap(expr.right)}"
    raise TypeError(f"not a feature expression: {expr!r}")


_TOKEN_RE = re.compile(r"\s*(?:(<->|->|&&|\|\||!|\(|\))|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ConstraintSyntaxError(
                f"unexpected character {text[start]!r}", len(text[:start].encode())
            )
        tok = m.group(1) or m.group(2)
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((tok, len(text[:start].encode())))
        pos = m.end()
    tokens.append((None, len(text.encode())))
    return tokens


class _ConstraintParser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, what):
        tok, offset = self.tokens[self.i]
        found = "end of input" if tok is None else repr(tok)
        raise ConstraintSyntaxError(f"expected {what}, found {found}", offset)

    def parse(self):
        expr = self.equiv()
        if self.peek() is not None:
            self.fail("end of input")
        return expr

    def equiv(self):
        left = self.implies()
        if self.peek() == "<->":
            self.take()
            return Equiv(left, self.implies())
        return left

    def implies(self):
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self):
        ops = [self.conjunction()]
        while self.peek() == "||":
            self.take()
            ops.append(self.conjunction())
        return ops[0] if len(ops) == 1 else Or(tuple(ops))

    def conjunction(self):
        ops = [self.factor()]
        while self.peek() == "&&":
            self.take()
            ops.append(self.factor())
        return ops[0] if len(ops) == 1 else And(tuple(ops))

    def factor(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.factor())
        if tok == "(":
            self.take()
            expr = self.equiv()
            if self.peek() != ")":
                self.fail("')'")
            self.take()
            return expr
        if tok is not None and NAME_RE.fullmatch(tok):
            self.take()
            if tok == "true":
                return TRUE
            if tok == "false":
                return FALSE
            return Var(tok)
        self.fail("feature name, literal, '!' or '('")


def parse_constraint(text: str) -> FeatureExpr:
    """Parse ``text`` such as ``"Save && (Ping_Pong || Brick_Game)"``.

    ``||`` binds loosest and ``!`` tightest; ``->`` and ``<->`` are accepted
    below ``||``.
    """
    return _ConstraintParser(text).parse()


# ---------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class Configuration:
    selected: frozenset

    def __init__(self, selected: Iterable[str] = ()):
        object.__setattr__(self, "selected", frozenset(selected))

    def __contains__(self, name):
        return name in self.selected

    def __len__(self):
        return len(self.selected)


def eval_expr(expr: FeatureExpr, config, universe=None) -> bool:
    """Evaluate ``expr`` with every selected feature true.

    When ``universe`` is given, names outside it raise ``KeyError``.
    """
    if universe is not None:
        unknown = sorted(expr.names() - set(universe))
        if unknown:
            raise KeyError(f"unknown feature {unknown[0]}")
    selected = config.selected if isinstance(config, Configuration) else config
    return expr.evaluate(selected)


# ---------------------------------------------------------------------------
# Feature model

MANDATORY, OPTIONAL, ALT, OR = "mandatory", "optional", "alt", "or"


@dataclass(frozen=True)
class FeatureModel:
    """Feature tree plus cross-tree constraints.

    ``tree`` maps each non-root feature to ``(parent, kind)``; for ``alt``
    and ``or`` members the group is identified by the parent name.
    ``decomposition`` maps every feature to ``"and"``, ``"alt"`` or ``"or"``.
    """

    features: tuple
    root: str
    tree: Mapping[str, tuple] = field(default_factory=dict)
    decomposition: Mapping[str, str] = field(default_factory=dict)
    abstract: frozenset = frozenset()
    constraints: tuple = ()

    def __post_init__(self):
        if self.root not in self.features:
            raise FeatureModelError(f"root {self.root} is not a feature")
        if len(set(self.features)) != len(self.features):
            raise FeatureModelError("duplicate feature name")
        if set(self.tree) != set(self.features) - {self.root}:
            raise FeatureModelError("every non-root feature needs exactly one parent")
        parents = {p for p, _ in self.tree.values()}
        # a group decomposition without children means nothing; leaves are plain features
        object.__setattr__(self, "decomposition", {
            f: (self.decomposition.get(f, "and") if f in parents else "and") for f in self.features
        })
        for child, (parent, kind) in self.tree.items():
            dec = self.decomposition.get(parent, "and")
            if dec == "and" and kind not in (MANDATORY, OPTIONAL):
                raise FeatureModelError(f"{child}: bad child kind {kind} under and-node")
            if dec in (ALT, OR) and kind != dec:
                raise FeatureModelError(f"{child}: must be a {dec}-member of {parent}")
        for f in self.features:
            seen = set()
            cur = f
            while cur != self.root:
                if cur in seen:
                    raise FeatureModelError(f"cycle through {f}")
                seen.add(cur)
                cur = self.tree[cur][0]
        known = set(self.features)
        for c in self.constraints:
            for name in sorted(c.names() - known):
                raise FeatureModelError(f"unknown feature {name}", "constraints")

    @property
    def index(self) -> dict:
        return {f: i for i, f in enumerate(self.features)}

    def children(self, feature) -> list:
        return [c for c in self.features if c in self.tree and self.tree[c][0] == feature]

    def groups(self) -> list:
        """``(kind, parent, members)`` for every alt/or group, in feature order."""
        out = []
        for f in self.features:
            dec = self.decomposition.get(f, "and")
            kids = self.children(f)
            if dec in (ALT, OR) and kids:
                out.append((dec, f, tuple(kids)))
        return out

    def optional_features(self) -> list:
        return [f for f in self.features if f in self.tree and self.tree[f][1] == OPTIONAL]

    def key(self, config: Configuration) -> tuple:
        """Feature-order bitvector used for sorting configurations."""
        return tuple(f in config.selected for f in self.features)

    def label(self, config: Configuration) -> str:
        return "-".join(f for f in self.features if f in config.selected)


def configuration_violations(fm: FeatureModel, config: Configuration) -> list:
    """Every violated validity clause, as human-readable strings."""
    sel = config.selected
    problems = []
    for name in sorted(sel - set(fm.features)):
        problems.append(f"unknown feature {name}")
    if fm.root not in sel:
        problems.append(f"root {fm.root} not selected")
    for child, (parent, kind) in fm.tree.items():
        if child in sel and parent not in sel:
            problems.append(f"{child} selected without parent {parent}")
        if kind == MANDATORY and parent in sel and child not in sel:
            problems.append(f"mandatory {child} missing under {parent}")
    for kind, parent, members in fm.groups():
        count = sum(m in sel for m in members)
        if parent in sel:
            if kind == ALT and count != 1:
                problems.append(f"alternative group under {parent} has {count} members selected")
            if kind == OR and count < 1:
                problems.append(f"or group under {parent} has no member selected")
        elif count:
            problems.append(f"group members of unselected {parent} selected")
    for i, c in enumerate(fm.constraints):
        if not c.evaluate(sel):
            problems.append(f"constraint {i} violated: {to_text(c)}")
    return problems


def validate_configuration(fm: FeatureModel, config: Configuration) -> bool:
    return not configuration_violations(fm, config)


def _tree_configurations(fm: FeatureModel, feature) -> Iterator[frozenset]:
    """Selections of the subtree under a selected ``feature`` (constraints ignored)."""
    kids = fm.children(feature)
    dec = fm.decomposition.get(feature, "and")
    options = []
    if dec == "and":
        for k in kids:
            subs = list(_tree_configurations(fm, k))
            if fm.tree[k][1] == OPTIONAL:
                subs = [frozenset()] + subs
            options.append(subs)
    elif dec == ALT:
        options.append([s for k in kids for s in _tree_configurations(fm, k)])
    else:
        per_member = [[frozenset()] + list(_tree_configurations(fm, k)) for k in kids]
        options.append([
            frozenset().union(*combo)
            for combo in itertools.product(*per_member)
            if any(combo)
        ])
    for combo in itertools.product(*options):
        yield frozenset((feature,)).union(*combo)


def enumerate_configurations(fm: FeatureModel, limit: int) -> list:
    """All valid configurations, sorted by feature-order bitvector.

    Raises ``ConfigurationLimitExceeded`` when more than ``limit`` exist.
    """
    if limit is not None and limit <= 0:
        raise ValueError("limit must be positive")
    found = []
    for selection in _tree_configurations(fm, fm.root):
        if all(c.evaluate(selection) for c in fm.constraints):
            found.append(Configuration(selection))
            if limit is not None and len(found) > limit:
                raise ConfigurationLimitExceeded(limit)
    found.sort(key=fm.key)
    return found


def truth_mask(expr: FeatureExpr, configs) -> int:
    """Bitmask with bit ``i`` set when ``expr`` holds in ``configs[i]``."""
    mask = 0
    for i, c in enumerate(configs):
        if expr.evaluate(c.selected):
            mask |= 1 << i
    return mask


# ---------------------------------------------------------------------------
# FeatureIDE XML

_SKIPPED = {"graphics", "comments", "calculations", "properties", "description"}
_XML_OPS = {"not": Not, "conj": And, "disj": Or, "imp": Implies, "eq": Equiv}


def _bool_attr(elem, name):
    return elem.get(name, "false").strip().lower() == "true"


def parse_feature_model(xml_text: str) -> FeatureModel:
    """Read the structural subset of a FeatureIDE ``model.xml`` document."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise FeatureModelError(f"malformed XML: {exc}") from None
    if root.tag != "featureModel":
        raise FeatureModelError(f"unknown element <{root.tag}>", f"/{root.tag}")

    features = []
    tree = {}
    decomposition = {}
    abstract = set()
    constraints = []
    struct = None

    def visit(elem, path, parent):
        if elem.tag not in ("and", "or", "alt", "feature"):
            raise FeatureModelError(f"unknown element <{elem.tag}>", path)
        name = elem.get("name")
        if not name:
            raise FeatureModelError("feature without name", path)
        if name in features:
            raise FeatureModelError(f"duplicate feature name {name}", path)
        if not NAME_RE.fullmatch(name):
            raise FeatureModelError(f"invalid feature name {name!r}", path)
        features.append(name)
        if _bool_attr(elem, "abstract"):
            abstract.add(name)
        if parent is not None:
            pdec = decomposition[parent]
            if pdec == "and":
                kind = MANDATORY if _bool_attr(elem, "mandatory") else OPTIONAL
            else:
                kind = pdec
            tree[name] = (parent, kind)
        decomposition[name] = "and" if elem.tag == "feature" else elem.tag
        kids = [c for c in elem if c.tag not in _SKIPPED]
        if elem.tag == "feature" and kids:
            raise FeatureModelError(f"<feature> {name} cannot have children", path)
        for child in kids:
            visit(child, f"{path}/{child.tag}[@name={child.get('name')!r}]", name)

    def expr_of(elem, path):
        if elem.tag == "var":
            name = (elem.text or "").strip()
            return Var(name)
        if elem.tag not in _XML_OPS:
            raise FeatureModelError(f"unknown element <{elem.tag}>", path)
        args = [expr_of(c, f"{path}/{c.tag}") for c in elem if c.tag not in _SKIPPED]
        op = _XML_OPS[elem.tag]
        if op is Not:
            if len(args) != 1:
                raise FeatureModelError("<not> takes exactly one operand", path)
            return Not(args[0])
        if op in (Implies, Equiv):
            if len(args) != 2:
                raise FeatureModelError(f"<{elem.tag}> takes exactly two operands", path)
            return op(args[0], args[1])
        if len(args) < 2:
            raise FeatureModelError(f"<{elem.tag}> needs at least two operands", path)
        return op(tuple(args))

    for section in root:
        path = f"/featureModel/{section.tag}"
        if section.tag == "struct":
            if struct is not None:
                raise FeatureModelError("duplicate <struct>", path)
            kids = [c for c in section if c.tag not in _SKIPPED]
            if len(kids) != 1:
                raise FeatureModelError("<struct> must contain exactly one root feature", path)
            struct = kids[0]
            visit(struct, f"{path}/{struct.tag}[@name={struct.get('name')!r}]", None)
        elif section.tag == "constraints":
            for i, rule in enumerate(section):
                rpath = f"{path}/rule[{i}]"
                if rule.tag in _SKIPPED:
                    continue
                if rule.tag != "rule":
                    raise FeatureModelError(f"unknown element <{rule.tag}>", rpath)
                body = [c for c in rule if c.tag not in _SKIPPED]
                if len(body) != 1:
                    raise FeatureModelError("<rule> must contain one expression", rpath)
                expr = expr_of(body[0], f"{rpath}/{body[0].tag}")
                for name in sorted(expr.names()):
                    if name not in features:
                        raise FeatureModelError(f"unknown feature {name}", rpath)
                constraints.append(expr)
        elif section.tag in _SKIPPED or section.tag == "featureOrder":
            continue
        else:
            raise FeatureModelError(f"unknown element <{section.tag}>", path)
    if struct is None:
        raise FeatureModelError("missing <struct>", "/featureModel")
    # constraints may precede struct in the document; re-check references
    known = set(features)
    for expr in constraints:
        for name in sorted(expr.names() - known):
            raise FeatureModelError(f"unknown feature {name}", "/featureModel/constraints")
    return FeatureModel(
        features=tuple(features),
        root=features[0],
        tree=tree,
        decomposition=decomposition,
        abstract=frozenset(abstract),
        constraints=tuple(constraints),
    )


def _expr_element(expr):
    if isinstance(expr, Var):
        el = ET.Element("var")
        el.text = expr.name
        return el
    if isinstance(expr, Not):
        el = ET.Element("not")
        el.append(_expr_element(expr.operand))
        return el
    if isinstance(expr, (And, Or)):
        el = ET.Element("conj" if isinstance(expr, And) else "disj")
        for op in expr.operands:
            el.append(_expr_element(op))
        return el
    if isinstance(expr, (Implies, Equiv)):
        el = ET.Element("imp" if isinstance(expr, Implies) else "eq")
        el.append(_expr_element(expr.left))
        el.append(_expr_element(expr.right))
        return el
    raise FeatureModelError(f"cannot write {to_text(expr)} as FeatureIDE XML")


def write_feature_model(fm: FeatureModel) -> str:
    """Canonical FeatureIDE XML for ``fm`` (2-space indent)."""

    def feature_element(name):
        kids = fm.children(name)
        dec = fm.decomposition.get(name, "and")
        tag = dec if kids else "feature"
        el = ET.Element(tag)
        if name in fm.abstract:
            el.set("abstract", "true")
        if name == fm.root or fm.tree[name][1] == MANDATORY:
            el.set("mandatory", "true")
        el.set("name", name)
        for k in kids:
            el.append(feature_element(k))
        return el

    doc = ET.Element("featureModel")
    struct = ET.SubElement(doc, "struct")
    struct.append(feature_element(fm.root))
    cons = ET.SubElement(doc, "constraints")
    for c in fm.constraints:
        rule = ET.SubElement(cons, "rule")
        rule.append(_expr_element(c))
    ET.indent(doc, space="  ")
    body = ET.tostring(doc, encoding="unicode", short_empty_elements=True)
    return '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n' + body + "\n"
