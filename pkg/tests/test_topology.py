"""CV-connectivity against an exhaustive path-enumeration oracle."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wrcosim.errors import NetlistError
from wrcosim.netlist import (CircuitGraph, Element, ElementKind, FieldSpec,
                             SourceSpec, parse_netlist)
from wrcosim.topology import Prediction, cv_connected, predict


def _brute_force_cv(graph, a, b):
    """Enumerate every simple path over C/V edges only."""
    if a == b:
        return True
    edges = [(el.node_plus, el.node_minus) for el in graph.elements
             if el.kind in (ElementKind.CAPACITOR, ElementKind.VOLTAGE_SOURCE)]

    def walk(node, visited):
        if node == b:
            return True
        for x, y in edges:
            nxt = y if x == node else x if y == node else None
            if nxt is not None and nxt not in visited:
                if walk(nxt, visited | {nxt}):
                    return True
        return False

    return walk(a, {a})


def test_corpus_predictions(graph_a, graph_b):
    va = predict(graph_a)
    assert not va.cv_connected
    assert va.witness_path is None
    assert va.prediction is Prediction.CONVERGENCE_GUARANTEED

    vb = predict(graph_b)
    assert vb.cv_connected
    assert list(vb.witness_path) == ["C", "Vs"]
    assert vb.prediction is Prediction.NO_GUARANTEE


def test_coupling_nodes_directly(graph_a, graph_b):
    assert not cv_connected(graph_a, 0, 5).cv_connected
    assert cv_connected(graph_b, 0, 2).cv_connected


def test_single_capacitor_is_a_path():
    g = parse_netlist("C1 1 2 1.0\nR1 1 0 1.0\nR2 2 0 1.0\nF1 2 0 lumped 1\n.end")
    v = g and cv_connected(g, 1, 2)
    assert v.cv_connected
    assert list(v.witness_path) == ["C1"]


def test_replacing_an_inductor_by_a_capacitor_breaks_the_guarantee(graph_a):
    els = []
    for el in graph_a.elements:
        if el.name == "L1":
            els.append(Element("L1C", ElementKind.CAPACITOR, el.node_plus,
                               el.node_minus, 1.0))
        else:
            els.append(el)
    g = CircuitGraph(tuple(els))
    # node 5 now reaches ground through the new capacitor, C and Vs
    assert predict(g).prediction is Prediction.NO_GUARANTEE


def test_reflexive_and_symmetric(graph_b):
    same = cv_connected(graph_b, 2, 2)
    assert same.cv_connected and same.witness_path == ()
    ab = cv_connected(graph_b, 0, 2)
    ba = cv_connected(graph_b, 2, 0)
    assert ab.cv_connected == ba.cv_connected
    assert len(ab.witness_path) == len(ba.witness_path)


def test_unknown_node_rejected(graph_a):
    with pytest.raises(NetlistError, match="unknown node"):
        cv_connected(graph_a, 0, 99)


def test_predict_verdict_invariant(graph_a, graph_b):
    for g in (graph_a, graph_b):
        v = predict(g)
        assert v.cv_connected == (v.prediction is Prediction.NO_GUARANTEE)
        assert (v.witness_path is not None) == v.cv_connected


# -- randomized properties ----------------------------------------------------


@st.composite
def small_graphs(draw):
    n = draw(st.integers(min_value=2, max_value=8))
    elements = [Element(f"Rb{k}", ElementKind.RESISTOR, k, k - 1, 1.0)
                for k in range(1, n)]
    for j in range(draw(st.integers(min_value=0, max_value=8))):
        a = draw(st.integers(min_value=0, max_value=n - 1))
        b = draw(st.integers(min_value=0, max_value=n - 1).filter(lambda x: x != a))
        kind = draw(st.sampled_from("CVLRI"))
        if kind == "C":
            elements.append(Element(f"C{j}", ElementKind.CAPACITOR, a, b, 1.0))
        elif kind == "V":
            elements.append(Element(f"V{j}", ElementKind.VOLTAGE_SOURCE, a, b,
                                    SourceSpec("sin", 1.0, 1.0)))
        elif kind == "L":
            elements.append(Element(f"L{j}", ElementKind.INDUCTOR, a, b, 1.0))
        elif kind == "R":
            elements.append(Element(f"R{j}", ElementKind.RESISTOR, a, b, 1.0))
        else:
            elements.append(Element(f"I{j}", ElementKind.CURRENT_SOURCE, a, b,
                                    SourceSpec("dc", 1.0)))
    elements.append(Element("Fdev", ElementKind.FIELD, n - 1, 0,
                            FieldSpec("lumped", capacitance=1.0)))
    g = CircuitGraph(tuple(elements))
    a = draw(st.integers(min_value=0, max_value=n - 1))
    b = draw(st.integers(min_value=0, max_value=n - 1))
    return g, a, b


@given(small_graphs())
@settings(max_examples=120, deadline=None)
def test_matches_brute_force_enumeration(case):
    g, a, b = case
    assert cv_connected(g, a, b).cv_connected == _brute_force_cv(g, a, b)


@given(small_graphs())
@settings(max_examples=60, deadline=None)
def test_adding_an_element_never_disconnects(case):
    g, a, b = case
    before = cv_connected(g, a, b).cv_connected
    nodes = g.node_ids
    extra = Element("Xtra", ElementKind.CAPACITOR, nodes[0], nodes[-1], 1.0) \
        if nodes[0] != nodes[-1] else None
    if extra is None:
        return
    g2 = CircuitGraph(g.elements + (extra,))
    after = cv_connected(g2, a, b).cv_connected
    assert after or not before  # true never flips to false


@given(small_graphs())
@settings(max_examples=60, deadline=None)
def test_removing_a_cv_edge_never_connects(case):
    g, a, b = case
    before = cv_connected(g, a, b).cv_connected
    removable = [el for el in g.elements
                 if el.kind in (ElementKind.CAPACITOR, ElementKind.VOLTAGE_SOURCE)]
    for el in removable:
        try:
            g2 = CircuitGraph(tuple(e for e in g.elements if e is not el))
        except NetlistError:
            continue  # removal disconnected the graph; not a valid case
        after = cv_connected(g2, a, b).cv_connected
        assert before or not after  # false never flips to true
