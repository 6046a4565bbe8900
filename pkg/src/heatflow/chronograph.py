"""Chronodendrogram: clusters per time slice linked by inherited point counts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

__all__ = ["Node", "Edge", "Chronodendrogram", "build", "slice", "export_dot", "export_json", "import_json"]


class Node(NamedTuple):
    k: int
    i: int
    size: int


class Edge(NamedTuple):
    """Cluster i at slice k inherits ``w`` points from cluster ``iprev`` at k-1."""

    k: int
    i: int
    iprev: int
    w: int


@dataclass(frozen=True)
class Chronodendrogram:
    times: Tuple[float, ...]
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]

    @property
    def T(self) -> int:
        return len(self.times) - 1

    def layer(self, k: int) -> List[Node]:
        return [nd for nd in self.nodes if nd.k == k]

    def incoming(self, k: int, i: int) -> List[Edge]:
        return [e for e in self.edges if e.k == k and e.i == i]

    def outgoing(self, k: int, i: int) -> List[Edge]:
        """Edges from cluster i at slice k to slice k+1."""
        return [e for e in self.edges if e.k == k + 1 and e.iprev == i]


def build(flow) -> Chronodendrogram:
    """Link every pair of consecutive slices by intersection counts."""
    nodes, edges = [], []
    prev = None
    for k, cl in enumerate(flow.clusterings):
        nodes.extend(Node(k, i, int(s)) for i, s in enumerate(cl.sizes))
        if prev is not None:
            # contingency table: rows = clusters at k, cols = clusters at k-1
            table = np.zeros((cl.M, prev.M), dtype=np.int64)
            np.add.at(table, (cl.labels, prev.labels), 1)
            for i, ip in zip(*np.nonzero(table)):
                edges.append(Edge(k, int(i), int(ip), int(table[i, ip])))
        prev = cl
    return Chronodendrogram(tuple(float(t) for t in flow.times.times), tuple(nodes), tuple(edges))


def slice(tree: Chronodendrogram, k: int) -> List[Tuple[int, int]]:
    """(label, size) of the clusters at slice k, in label order."""
    if not 0 <= k <= tree.T:
        raise IndexError(f"time index {k} outside 0..{tree.T}")
    return [(nd.i, nd.size) for nd in tree.layer(k)]


def _name(k, i) -> str:
    return f'"{k}_{i}"'


def export_dot(tree: Chronodendrogram, max_penwidth: float = 8.0) -> str:
    """Graphviz digraph, one rank per slice, arrows pointing forward in time."""
    lines = ["digraph chronodendrogram {", "  rankdir=LR;", "  node [shape=circle];"]
    wmax = max((e.w for e in tree.edges), default=1)
    for k in range(len(tree.times)):
        members = " ".join(f"{_name(nd.k, nd.i)};" for nd in tree.layer(k))
        lines.append(f"  {{ rank=same; {members} }}")
    for nd in tree.nodes:
        lines.append(f'  {_name(nd.k, nd.i)} [label="{nd.size}"];')
    for e in tree.edges:
        pw = max_penwidth * e.w / wmax
        lines.append(
            f'  {_name(e.k - 1, e.iprev)} -> {_name(e.k, e.i)} [penwidth={pw!r}, label="{e.w}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_json(tree: Chronodendrogram) -> str:
    doc = {
        "times": list(tree.times),
        "nodes": [{"k": nd.k, "i": nd.i, "size": nd.size} for nd in tree.nodes],
        "edges": [{"k": e.k, "i": e.i, "iprev": e.iprev, "w": e.w} for e in tree.edges],
    }
    return json.dumps(doc, indent=1) + "\n"


def import_json(text: str) -> Chronodendrogram:
    doc = json.loads(text)
    return Chronodendrogram(
        tuple(float(t) for t in doc["times"]),
        tuple(Node(int(d["k"]), int(d["i"]), int(d["size"])) for d in doc["nodes"]),
        tuple(Edge(int(d["k"]), int(d["i"]), int(d["iprev"]), int(d["w"])) for d in doc["edges"]),
    )
