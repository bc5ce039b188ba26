"""Minimal reader for the Graphviz dot subset used by machine files.

Only flat digraphs are understood: node statements, edge statements
(``a -> b`` chains allowed), attribute lists, and default-attribute
statements (``graph``/``node``/``edge``), which are ignored.
"""

import re

from .errors import DotFormatError

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|\#[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<arrow>->|--)
  | (?P<punct>[{}\[\];,=])
  | (?P<ident>[^\s{}\[\];,="]+?(?=->|--|[\s{}\[\];,="]|$))
    """,
    re.VERBOSE | re.DOTALL,
)


def _unquote(text):
    return re.sub(r"\\(.)", r"\1", text[1:-1])


def tokenize(text):
    tokens = []
    pos = 0
    line = 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DotFormatError(f"unexpected character {text[pos]!r}", f"line {line}")
        kind = m.lastgroup
        value = m.group()
        if kind == "string":
            tokens.append(("id", _unquote(value), line))
        elif kind == "ident":
            tokens.append(("id", value, line))
        elif kind in ("arrow", "punct"):
            tokens.append((value, value, line))
        line += value.count("\n")
        pos = m.end()
    return tokens


def parse_graph(text):
    """Return ``(nodes, edges)`` from a dot document.

    ``nodes`` maps node id to its attribute dict, in declaration order;
    ``edges`` is a list of ``(source, target, attrs, line)``.
    """
    tokens = tokenize(text)
    i = 0

    def peek(k=0):
        return tokens[i + k][0] if i + k < len(tokens) else None

    def expect(kind):
        nonlocal i
        if peek() != kind:
            where = f"line {tokens[i][2]}" if i < len(tokens) else "end of input"
            found = tokens[i][1] if i < len(tokens) else "end of input"
            raise DotFormatError(f"expected {kind!r}, found {found!r}", where)
        tok = tokens[i]
        i += 1
        return tok

    def attr_list():
        nonlocal i
        attrs = {}
        while peek() == "[":
            i += 1
            while peek() != "]":
                key = expect("id")[1]
                if peek() == "=":
                    i += 1
                    attrs[key] = expect("id")[1]
                else:
                    attrs[key] = "true"
                if peek() in (",", ";"):
                    i += 1
            expect("]")
        return attrs

    if peek() == "id" and tokens[i][1] == "strict":
        i += 1
    if peek() != "id" or tokens[i][1] not in ("digraph", "graph"):
        raise DotFormatError("document must start with 'digraph'", "line 1")
    i += 1
    if peek() == "id":
        i += 1
    expect("{")
    nodes = {}
    edges = []
    while peek() != "}":
        if peek() is None:
            raise DotFormatError("unterminated graph body", "end of input")
        if peek() == ";":
            i += 1
            continue
        name_tok = expect("id")
        name, line = name_tok[1], name_tok[2]
        if name in ("graph", "node", "edge") and peek() == "[":
            attr_list()
        elif name == "subgraph" or peek() == "{":
            raise DotFormatError("subgraphs are not supported", f"line {line}")
        elif peek() == "=":
            i += 1
            expect("id")
        elif peek() == "->":
            chain = [name]
            while peek() == "->":
                i += 1
                chain.append(expect("id")[1])
            attrs = attr_list()
            for src, dst in zip(chain, chain[1:]):
                edges.append((src, dst, attrs, line))
        elif peek() == "--":
            raise DotFormatError("undirected edges are not supported", f"line {line}")
        else:
            attrs = attr_list()
            nodes.setdefault(name, {}).update(attrs)
        if peek() == ";":
            i += 1
    expect("}")
    if i != len(tokens):
        raise DotFormatError("trailing content after graph", f"line {tokens[i][2]}")
    return nodes, edges


def is_start_marker(name, attrs):
    """True for the invisible pseudo-node pointing at the initial state."""
    if attrs.get("shape", "").lower() in ("none", "point", "plaintext") and attrs.get("label", "") == "":
        return True
    if "label" in attrs and attrs["label"] in ("", "none"):
        return True
    return name.startswith("__start")


def quote(text):
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", text):
        return text
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'
