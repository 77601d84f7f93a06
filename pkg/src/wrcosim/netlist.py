"""Netlist parsing and the validated circuit graph.

Grammar (one element per line, ``#`` starts a comment, ``.end`` terminates):

    R<name> n+ n- <ohms>
    C<name> n+ n- <farads>
    L<name> n+ n- <henrys>
    V<name> n+ n- dc <volts> | sin <amp> <freq> [<phase>]
    I<name> n+ n- dc <amps>  | sin <amp> <freq> [<phase>]
    D<name> n+ n- <Is> <Vt>
    F<name> n+ n- lumped <C> | ladder <N> <Ctotal> <Gtotal>

Node ids are non-negative integers and 0 is ground. At most one F element is
allowed: the package couples a single distributed device into the circuit.
Pure circuits without an F element parse fine; operations that need the
coupling (prediction, assembly) reject them.
"""

import enum
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import NetlistError


class ElementKind(enum.Enum):
    RESISTOR = "R"
    CAPACITOR = "C"
    INDUCTOR = "L"
    VOLTAGE_SOURCE = "V"
    CURRENT_SOURCE = "I"
    DIODE = "D"
    FIELD = "F"


@dataclass(frozen=True)
class SourceSpec:
    """Independent source waveform: dc level or a sine amp*sin(2*pi*f*t + phase)."""

    shape: str  # "dc" | "sin"
    amplitude: float
    frequency: float | None = None
    phase: float = 0.0

    def __post_init__(self):
        if self.shape not in ("dc", "sin"):
            raise ValueError(f"unknown source shape {self.shape!r}")
        if self.shape == "sin" and (self.frequency is None or self.frequency <= 0):
            raise ValueError("sin source needs frequency > 0")

    def value(self, t):
        if self.shape == "dc":
            t = np.asarray(t, dtype=float)
            out = np.full(t.shape, self.amplitude)
            return float(self.amplitude) if t.ndim == 0 else out
        return self.amplitude * np.sin(2.0 * math.pi * self.frequency * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class DiodeParams:
    """Shockley diode i = Is*(exp(v/Vt) - 1)."""

    i_s: float
    v_t: float


@dataclass(frozen=True)
class FieldSpec:
    """Constructor arguments of the coupled device model named in a netlist."""

    model: str  # "lumped" | "ladder"
    capacitance: float | None = None  # lumped
    sections: int | None = None  # ladder
    c_total: float | None = None
    g_total: float | None = None


@dataclass(frozen=True)
class Element:
    name: str
    kind: ElementKind
    node_plus: int
    node_minus: int
    params: object

    @property
    def nodes(self) -> tuple[int, int]:
        return (self.node_plus, self.node_minus)


_INT_RE = re.compile(r"^\d+$")


class CircuitGraph:
    """Validated element list with incidence matrices per element kind.

    Rows of every incidence matrix follow ``nodes`` (the sorted non-ground
    node ids); the ground row is omitted. A column carries +1 at the element's
    positive node and -1 at its negative node.
    """

    def __init__(self, elements: tuple[Element, ...]):
        self.elements = tuple(elements)
        ids = set()
        for el in self.elements:
            ids.update(el.nodes)
        self.node_ids = tuple(sorted(ids))
        self.nodes = tuple(n for n in self.node_ids if n != 0)
        self._row = {n: r for r, n in enumerate(self.nodes)}
        self._validate()

    # -- queries ---------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        """Total node count, ground included."""
        return len(self.node_ids)

    def elements_of(self, kind: ElementKind) -> tuple[Element, ...]:
        return tuple(el for el in self.elements if el.kind is kind)

    @property
    def field_element(self) -> Element:
        fields = self.elements_of(ElementKind.FIELD)
        if not fields:
            raise NetlistError("netlist has no F element")
        return fields[0]

    def node_row(self, node: int) -> int:
        """Row index of a non-ground node in the reduced incidence matrices."""
        if node not in self._row:
            raise NetlistError(f"unknown or ground node id {node}")
        return self._row[node]

    def incidence(self, kind: ElementKind) -> np.ndarray:
        """Reduced incidence matrix of one element kind (may have 0 columns)."""
        els = self.elements_of(kind)
        a = np.zeros((len(self.nodes), len(els)))
        for j, el in enumerate(els):
            if el.node_plus != 0:
                a[self._row[el.node_plus], j] = 1.0
            if el.node_minus != 0:
                a[self._row[el.node_minus], j] = -1.0
        return a

    # -- validation ------------------------------------------------------

    def _validate(self):
        if not self.elements:
            raise NetlistError("empty netlist")
        names = set()
        for el in self.elements:
            if el.name in names:
                raise NetlistError(f"duplicate element name {el.name!r}")
            names.add(el.name)
            if el.node_plus == el.node_minus:
                raise NetlistError(f"element {el.name!r} is a self-loop at node {el.node_plus}")
            if el.kind in (ElementKind.RESISTOR, ElementKind.CAPACITOR, ElementKind.INDUCTOR):
                if not el.params > 0:
                    raise NetlistError(f"element {el.name!r} needs a strictly positive value")
        if 0 not in self.node_ids:
            raise NetlistError("missing ground node 0")
        n_field = len(self.elements_of(ElementKind.FIELD))
        if n_field > 1:
            # one coupled device per netlist; pure circuits (zero F) are fine
            # to parse and are rejected where the coupling is actually needed
            raise NetlistError(f"netlist must contain at most one F element, found {n_field}")
        self._check_connected()

    def _check_connected(self):
        adj = {n: set() for n in self.node_ids}
        for el in self.elements:
            adj[el.node_plus].add(el.node_minus)
            adj[el.node_minus].add(el.node_plus)
        seen = {0}
        stack = [0]
        while stack:
            for m in adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        missing = set(self.node_ids) - seen
        if missing:
            raise NetlistError(f"nodes {sorted(missing)} are not connected to ground")

    # -- serialization ---------------------------------------------------

    def to_text(self) -> str:
        """Round-trippable textual form; parsing it yields an identical graph."""
        lines = []
        for el in self.elements:
            head = f"{el.name} {el.node_plus} {el.node_minus}"
            p = el.params
            if el.kind in (ElementKind.RESISTOR, ElementKind.CAPACITOR, ElementKind.INDUCTOR):
                lines.append(f"{head} {p!r}")
            elif el.kind in (ElementKind.VOLTAGE_SOURCE, ElementKind.CURRENT_SOURCE):
                if p.shape == "dc":
                    lines.append(f"{head} dc {p.amplitude!r}")
                else:
                    lines.append(f"{head} sin {p.amplitude!r} {p.frequency!r} {p.phase!r}")
            elif el.kind is ElementKind.DIODE:
                lines.append(f"{head} {p.i_s!r} {p.v_t!r}")
            else:
                if p.model == "lumped":
                    lines.append(f"{head} lumped {p.capacitance!r}")
                else:
                    lines.append(f"{head} ladder {p.sections} {p.c_total!r} {p.g_total!r}")
        lines.append(".end")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return isinstance(other, CircuitGraph) and self.elements == other.elements

    def __repr__(self):
        return f"CircuitGraph({len(self.elements)} elements, {len(self.nodes)} non-ground nodes)"


# -- parser ---------------------------------------------------------------


def _tokens(line: str):
    """(token, 1-based column) pairs, comments stripped."""
    line = line.split("#", 1)[0]
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


class _LineParser:
    def __init__(self, lineno: int, toks):
        self.lineno = lineno
        self.toks = toks
        self.pos = 0

    def fail(self, msg: str, at: int | None = None):
        col = None
        if at is not None and at < len(self.toks):
            col = self.toks[at][1]
        elif self.toks:
            col = self.toks[min(self.pos, len(self.toks) - 1)][1]
        raise NetlistError(msg, line=self.lineno, col=col)

    def take(self, what: str) -> str:
        if self.pos >= len(self.toks):
            self.fail(f"expected {what}, line ended early", at=len(self.toks) - 1)
        tok = self.toks[self.pos][0]
        self.pos += 1
        return tok

    def take_node(self, what: str) -> int:
        tok = self.take(what)
        if not _INT_RE.match(tok):
            self.fail(f"{what} must be a non-negative integer, got {tok!r}", at=self.pos - 1)
        return int(tok)

    def take_float(self, what: str) -> float:
        tok = self.take(what)
        try:
            val = float(tok)
        except ValueError:
            self.fail(f"{what} must be a number, got {tok!r}", at=self.pos - 1)
        if not math.isfinite(val):
            self.fail(f"{what} must be finite", at=self.pos - 1)
        return val

    def take_int(self, what: str) -> int:
        tok = self.take(what)
        if not _INT_RE.match(tok):
            self.fail(f"{what} must be a non-negative integer, got {tok!r}", at=self.pos - 1)
        return int(tok)

    def done(self):
        if self.pos != len(self.toks):
            self.fail(f"unexpected trailing token {self.toks[self.pos][0]!r}", at=self.pos)

    def maybe_float(self):
        if self.pos < len(self.toks):
            return self.take_float("value")
        return None


def _parse_source(lp: _LineParser) -> SourceSpec:
    shape = lp.take("source shape (dc|sin)")
    if shape == "dc":
        amp = lp.take_float("dc value")
        lp.done()
        return SourceSpec("dc", amp)
    if shape == "sin":
        amp = lp.take_float("amplitude")
        freq = lp.take_float("frequency")
        if freq <= 0:
            lp.fail("frequency must be > 0", at=lp.pos - 1)
        phase = lp.maybe_float()
        lp.done()
        return SourceSpec("sin", amp, freq, 0.0 if phase is None else phase)
    lp.fail(f"unknown source shape {shape!r}", at=lp.pos - 1)


def _parse_field(lp: _LineParser) -> FieldSpec:
    model = lp.take("field model (lumped|ladder)")
    if model == "lumped":
        c = lp.take_float("capacitance")
        lp.done()
        if c <= 0:
            lp.fail("lumped capacitance must be > 0")
        return FieldSpec("lumped", capacitance=c)
    if model == "ladder":
        n = lp.take_int("section count")
        c = lp.take_float("total capacitance")
        g = lp.take_float("total conductance")
        lp.done()
        if n < 1 or c <= 0 or g < 0:
            lp.fail("ladder needs N >= 1, Ctotal > 0, Gtotal >= 0")
        return FieldSpec("ladder", sections=n, c_total=c, g_total=g)
    lp.fail(f"unknown field model {model!r}", at=lp.pos - 1)


def parse_netlist(text: str) -> CircuitGraph:
    """Parse netlist text into a validated :class:`CircuitGraph`."""
    elements = []
    terminated = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        if toks[0][0] == ".end":
            terminated = True
            break
        lp = _LineParser(lineno, toks)
        name = lp.take("element name")
        try:
            kind = ElementKind(name[0].upper())
        except ValueError:
            lp.fail(f"unknown element kind {name[0]!r} in {name!r}", at=0)
        np_, nm = lp.take_node("n+"), lp.take_node("n-")
        if kind in (ElementKind.RESISTOR, ElementKind.CAPACITOR, ElementKind.INDUCTOR):
            val = lp.take_float("value")
            lp.done()
            if val <= 0:
                lp.fail(f"{kind.name.lower()} value must be > 0")
            params: object = val
        elif kind in (ElementKind.VOLTAGE_SOURCE, ElementKind.CURRENT_SOURCE):
            params = _parse_source(lp)
        elif kind is ElementKind.DIODE:
            i_s = lp.take_float("saturation current")
            v_t = lp.take_float("thermal voltage")
            lp.done()
            if i_s <= 0 or v_t <= 0:
                lp.fail("diode needs Is > 0 and Vt > 0")
            params = DiodeParams(i_s, v_t)
        else:
            params = _parse_field(lp)
        if np_ == nm:
            lp.fail(f"element {name!r} is a self-loop at node {np_}")
        elements.append(Element(name, kind, np_, nm, params))
    if not terminated:
        raise NetlistError("missing '.end' terminator")
    return CircuitGraph(tuple(elements))


# -- bundled reference netlists -------------------------------------------


def bundled_netlist_path(name: str) -> Path:
    """Path of a reference netlist shipped with the package."""
    if not name.endswith(".net"):
        name = name + ".net"
    p = resources.files("wrcosim").joinpath("netlists").joinpath(name)
    with resources.as_file(p) as concrete:
        return Path(concrete)


def load_netlist(path: str | Path) -> CircuitGraph:
    """Parse a netlist file; bare bundled names (circuit_a.net) also resolve."""
    p = Path(path)
    if not p.exists():
        try:
            p = bundled_netlist_path(str(path))
        except (FileNotFoundError, ModuleNotFoundError):
            pass
    if not p.exists():
        raise NetlistError(f"netlist file not found: {path}")
    return parse_netlist(p.read_text())
