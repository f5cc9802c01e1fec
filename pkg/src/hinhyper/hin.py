"""Typed graph, target vocabulary and attached corpus.

File formats
------------
nodes   TSV: ``node_id  node_type  [text_key]``
edges   TSV: ``src_id  dst_id  edge_type``
schema  JSON: ``{"node_types": [...], "edge_types": {name: [src_type, dst_type]}}``
corpus  JSON lines: ``{"node_id": ..., "sentences": [[token, ...], ...]}``
"""
from __future__ import annotations

import json
import os
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "GraphFormatError",
    "Schema",
    "HinGraph",
    "Term",
    "Vocabulary",
    "Document",
    "Corpus",
    "normalize_term",
    "tokenize",
    "load_graph",
    "write_graph",
    "target_vocabulary",
    "neighbors_of_type",
    "load_corpus",
    "write_corpus",
]


class GraphFormatError(ValueError):
    """Raised when a graph, schema or corpus source fails validation."""


_WS = re.compile(r"\s+")
_TOKEN = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")


def normalize_term(text: str) -> str:
    """Lowercase and collapse internal whitespace."""
    return _WS.sub(" ", text.strip().lower())


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _lines(source) -> Iterator[str]:
    # str/PathLike is a path; anything else is an iterable of lines
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


@dataclass(frozen=True)
class Schema:
    node_types: tuple[str, ...]
    edge_types: Mapping[str, tuple[str, str]]

    def to_json(self) -> dict:
        return {
            "node_types": list(self.node_types),
            "edge_types": {k: list(v) for k, v in self.edge_types.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Schema":
        try:
            node_types = tuple(obj["node_types"])
            edge_types = {str(k): tuple(v) for k, v in obj["edge_types"].items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise GraphFormatError(f"schema: malformed document ({exc})") from None
        if len(set(node_types)) != len(node_types):
            raise GraphFormatError("schema: duplicate node type")
        for name, ends in edge_types.items():
            if len(ends) != 2:
                raise GraphFormatError(f"schema: edge type {name!r} needs [src_type, dst_type]")
            for t in ends:
                if t not in node_types:
                    raise GraphFormatError(f"schema: edge type {name!r} uses unknown node type {t!r}")
        return cls(node_types, edge_types)


@dataclass(frozen=True)
class HinGraph:
    """Immutable heterogeneous graph.

    Edges keep the direction they were given in, but adjacency queries
    ignore it.
    """

    schema: Schema
    node_ids: tuple[str, ...]
    node_type: Mapping[str, str]
    text_key: Mapping[str, str | None]
    edges: tuple[tuple[str, str, str], ...]
    _adj: Mapping[str, tuple[tuple[str, str], ...]] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self._adj is None:
            adj: dict[str, list[tuple[str, str]]] = {n: [] for n in self.node_ids}
            for src, dst, etype in self.edges:
                adj[src].append((dst, etype))
                if dst != src:
                    adj[dst].append((src, etype))
            object.__setattr__(self, "_adj", {n: tuple(v) for n, v in adj.items()})

    @classmethod
    def build(cls, schema: Schema, nodes: Iterable[Sequence], edges: Iterable[Sequence]) -> "HinGraph":
        """Validate ``(id, type[, text_key])`` nodes and ``(src, dst, type)`` edges."""
        return cls._build(schema, enumerate(nodes, 1), enumerate(edges, 1))

    @classmethod
    def _build(cls, schema, numbered_nodes, numbered_edges) -> "HinGraph":
        ids: list[str] = []
        ntype: dict[str, str] = {}
        tkey: dict[str, str | None] = {}
        for lineno, rec in numbered_nodes:
            nid, t = rec[0], rec[1]
            key = rec[2] if len(rec) > 2 and rec[2] not in ("", None) else None
            if t not in schema.node_types:
                raise GraphFormatError(f"nodes line {lineno}: unknown node type {t!r}")
            if nid in ntype:
                raise GraphFormatError(f"nodes line {lineno}: duplicate node id {nid}")
            ids.append(nid)
            ntype[nid] = t
            tkey[nid] = key
        out_edges = []
        for lineno, (src, dst, etype) in numbered_edges:
            if etype not in schema.edge_types:
                raise GraphFormatError(f"edges line {lineno}: unknown edge type {etype!r}")
            for end in (src, dst):
                if end not in ntype:
                    raise GraphFormatError(f"edges line {lineno}: dangling endpoint {end}")
            want = schema.edge_types[etype]
            got = (ntype[src], ntype[dst])
            if got != tuple(want):
                raise GraphFormatError(
                    f"edges line {lineno}: schema violation: {etype} binds {want[0]}->{want[1]}, "
                    f"got {got[0]}->{got[1]} ({src}->{dst})"
                )
            out_edges.append((src, dst, etype))
        return cls(schema, tuple(ids), ntype, tkey, tuple(out_edges))

    def __len__(self) -> int:
        return len(self.node_ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def nodes_of_type(self, node_type: str) -> list[str]:
        return [n for n in self.node_ids if self.node_type[n] == node_type]

    def neighbors(self, node_id: str) -> tuple[tuple[str, str], ...]:
        """``(neighbor, edge_type)`` pairs, direction-agnostic, in edge order."""
        try:
            return self._adj[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r}") from None


def neighbors_of_type(graph: HinGraph, node_id: str, neighbor_type: str) -> frozenset[str]:
    return frozenset(n for n, _ in graph.neighbors(node_id) if graph.node_type[n] == neighbor_type)


def load_graph(nodes_source, edges_source, schema_source) -> HinGraph:
    if isinstance(schema_source, Mapping):
        schema = Schema.from_json(schema_source)
    else:
        text = "".join(_lines(schema_source))
        try:
            schema = Schema.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"schema: invalid JSON ({exc})") from None

    def rows(source, kind, width):
        for lineno, line in enumerate(_lines(source), 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in width:
                raise GraphFormatError(
                    f"{kind} line {lineno}: expected {'/'.join(map(str, width))} fields, got {len(parts)}"
                )
            yield lineno, parts

    return HinGraph._build(schema, rows(nodes_source, "nodes", (2, 3)), rows(edges_source, "edges", (3,)))


def write_graph(graph: HinGraph, nodes_path, edges_path, schema_path) -> None:
    with open(nodes_path, "w", encoding="utf-8") as fh:
        for n in graph.node_ids:
            key = graph.text_key[n]
            fh.write(f"{n}\t{graph.node_type[n]}" + (f"\t{key}" if key is not None else "") + "\n")
    with open(edges_path, "w", encoding="utf-8") as fh:
        for src, dst, etype in graph.edges:
            fh.write(f"{src}\t{dst}\t{etype}\n")
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(graph.schema.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class Term:
    term_id: int
    surface: str
    node_id: str


@dataclass(frozen=True)
class Vocabulary:
    target_type: str
    terms: tuple[Term, ...]

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __getitem__(self, term_id: int) -> Term:
        return self.terms[term_id]

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.terms]

    def id_of_node(self, node_id: str) -> int:
        return self._by_node[node_id]

    def id_of_surface(self, surface: str) -> int:
        """First term carrying ``surface`` (after normalization)."""
        return self._by_surface[normalize_term(surface)]

    @property
    def _by_node(self) -> dict[str, int]:
        cache = self.__dict__.get("_node_cache")
        if cache is None:
            cache = {t.node_id: t.term_id for t in self.terms}
            object.__setattr__(self, "_node_cache", cache)
        return cache

    @property
    def _by_surface(self) -> dict[str, int]:
        cache = self.__dict__.get("_surface_cache")
        if cache is None:
            cache = {}
            for t in self.terms:
                cache.setdefault(t.surface, t.term_id)
            object.__setattr__(self, "_surface_cache", cache)
        return cache


def _node_sort_key(node_id: str):
    # natural order so k2 < k10
    return [(0, int(p), "") if p.isdigit() else (1, 0, p) for p in re.split(r"(\d+)", node_id) if p]


def target_vocabulary(graph: HinGraph, target_type: str) -> Vocabulary:
    """Terms are the nodes of ``target_type`` in natural node-id order.

    The surface string is the node's text key when present, else its id.
    """
    if target_type not in graph.schema.node_types:
        raise ValueError(f"unknown target type {target_type!r}")
    ids = sorted(graph.nodes_of_type(target_type), key=_node_sort_key)
    if not ids:
        warnings.warn(f"graph has no nodes of target type {target_type!r}", stacklevel=2)
    terms = []
    seen: dict[str, str] = {}
    for i, nid in enumerate(ids):
        surface = normalize_term(graph.text_key[nid] or nid)
        if surface in seen:
            warnings.warn(f"duplicate surface {surface!r} for nodes {seen[surface]} and {nid}", stacklevel=2)
        else:
            seen[surface] = nid
        terms.append(Term(i, surface, nid))
    return Vocabulary(target_type, tuple(terms))


@dataclass(frozen=True)
class Document:
    owner: str
    sentences: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def sentences(self) -> Iterator[tuple[str, ...]]:
        for doc in self.documents:
            yield from doc.sentences


def load_corpus(source, graph: HinGraph | None = None) -> Corpus:
    docs = []
    for lineno, line in enumerate(_lines(source), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            owner = str(rec["node_id"])
            sents = tuple(tuple(str(tok).lower() for tok in s) for s in rec["sentences"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise GraphFormatError(f"corpus line {lineno}: malformed record ({exc})") from None
        if graph is not None and owner not in graph.node_type:
            raise GraphFormatError(f"corpus line {lineno}: unknown owner node {owner}")
        docs.append(Document(owner, sents))
    return Corpus(tuple(docs))


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps({"node_id": doc.owner, "sentences": [list(s) for s in doc.sentences]}))
            fh.write("\n")
