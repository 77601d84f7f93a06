"""Convergence prediction from coupling-node topology.

Two nodes are CV-connected when a path of nothing but capacitors and voltage
sources joins them. Co-simulation of a capacitance-like coupled device is
guaranteed to converge when its terminal nodes are NOT CV-connected; when
they are, no guarantee is made (the scheme may diverge or converge slowly,
the criterion is sufficient, not necessary).
"""

import enum
from collections import deque
from dataclasses import dataclass

from .errors import NetlistError
from .netlist import CircuitGraph, ElementKind


class Prediction(enum.Enum):
    CONVERGENCE_GUARANTEED = "ConvergenceGuaranteed"
    NO_GUARANTEE = "NoGuarantee"


@dataclass(frozen=True)
class CvVerdict:
    cv_connected: bool
    witness_path: tuple[str, ...] | None
    prediction: Prediction

    def to_dict(self) -> dict:
        return {
            "cv_connected": self.cv_connected,
            "witness": list(self.witness_path) if self.witness_path is not None else None,
            "prediction": self.prediction.value,
        }

    def human(self) -> str:
        s = f"CV-connected: {'true' if self.cv_connected else 'false'}"
        if self.witness_path:
            s += f"; witness: {' -> '.join(self.witness_path)}"
        return s + f"; prediction: {self.prediction.value}"


def _cv_adjacency(graph: CircuitGraph):
    adj: dict[int, list[tuple[int, str]]] = {n: [] for n in graph.node_ids}
    for el in graph.elements:
        if el.kind in (ElementKind.CAPACITOR, ElementKind.VOLTAGE_SOURCE):
            adj[el.node_plus].append((el.node_minus, el.name))
            adj[el.node_minus].append((el.node_plus, el.name))
    return adj


def cv_connected(graph: CircuitGraph, node_a: int, node_b: int) -> CvVerdict:
    """Decide CV-connectivity of two nodes; witness is a shortest C/V path."""
    for n in (node_a, node_b):
        if n not in graph.node_ids:
            raise NetlistError(f"unknown node id {n}")
    if node_a == node_b:
        return CvVerdict(True, (), Prediction.NO_GUARANTEE)

    adj = _cv_adjacency(graph)
    # BFS gives a shortest path in edge count.
    parent: dict[int, tuple[int, str]] = {}
    seen = {node_a}
    queue = deque([node_a])
    while queue:
        n = queue.popleft()
        for m, name in adj[n]:
            if m in seen:
                continue
            parent[m] = (n, name)
            if m == node_b:
                path = []
                cur = node_b
                while cur != node_a:
                    cur, ename = parent[cur]
                    path.append(ename)
                return CvVerdict(True, tuple(reversed(path)), Prediction.NO_GUARANTEE)
            seen.add(m)
            queue.append(m)
    return CvVerdict(False, None, Prediction.CONVERGENCE_GUARANTEED)


def predict(graph: CircuitGraph) -> CvVerdict:
    """Convergence prediction for the graph's coupled device terminals."""
    field = graph.elements_of(ElementKind.FIELD)
    if not field:
        raise NetlistError("graph has no F element to predict for")
    el = field[0]
    return cv_connected(graph, el.node_plus, el.node_minus)
