"""Lowering to the native gate set {u1, u2, u3, cx} on a directed coupling map.

Pipeline: ``route`` (layout preset, Toffoli-aware swap insertion) then
``unroll`` then ``direct_cx`` then ``fuse_1q``.  All passes preserve the
circuit unitary up to a global phase; routing additionally permutes logical
qubits, recorded as ``metadata["final_layout"]``.
"""
from __future__ import annotations

import cmath
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .circuit import (
    NATIVE,
    Circuit,
    Gate,
    GateOp,
    base_matrix,
    cswap_decompose,
    expand_polarity,
    op,
    toffoli_decompose,
)
from .errors import TranspileError

ANGLE_ATOL = 1e-12


@dataclass(frozen=True)
class CouplingMap:
    edges: frozenset[tuple[int, int]]
    layout: Mapping[str, int] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        if any(a == b or a < 0 or b < 0 for a, b in edges):
            raise TranspileError("coupling edges must join two distinct non-negative qubits")
        object.__setattr__(self, "edges", edges)
        layout = {str(k): int(v) for k, v in dict(self.layout).items()}
        if len(set(layout.values())) != len(layout):
            raise TranspileError("layout must be injective")
        nq = self.num_qubits
        if any(not 0 <= v < nq for v in layout.values()):
            raise TranspileError("layout references a qubit outside the coupling map")
        object.__setattr__(self, "layout", layout)

    @property
    def num_qubits(self) -> int:
        return 1 + max((q for e in self.edges for q in e), default=-1)

    def coupled(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CouplingMap":
        return cls(frozenset(tuple(e) for e in doc["edges"]), doc.get("layout", {}), doc.get("name", ""))

    @classmethod
    def load(cls, path: str | Path) -> "CouplingMap":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def ourense(cls) -> "CouplingMap":
        text = resources.files("swapclf.data").joinpath("ourense_coupling.json").read_text()
        return cls.from_dict(json.loads(text))


# --------------------------------------------------------------------------
# layout and routing
# --------------------------------------------------------------------------

def apply_layout(circuit: Circuit, coupling: CouplingMap) -> Circuit:
    """Relabel single-qubit registers onto the physical qubits named by the layout."""
    mapping: dict[int, int] = {}
    for name, phys in coupling.layout.items():
        if name in circuit.registers:
            (logical,) = circuit.registers[name]
            mapping[logical] = phys
    missing = [q for q in range(circuit.num_qubits) if q not in mapping]
    if missing:
        raise TranspileError(f"layout does not place logical qubits {missing}")
    width = max(coupling.num_qubits, circuit.num_qubits)
    ops = [
        GateOp(g.name, tuple(mapping[q] for q in g.targets), g.params,
               tuple((mapping[q], p) for q, p in g.controls))
        for g in circuit.ops
    ]
    regs = {k: tuple(mapping[q] for q in v) for k, v in circuit.registers.items()}
    return Circuit(width, tuple(ops), regs, {**circuit.metadata, "layout": dict(mapping)})


def route(circuit: Circuit, coupling: CouplingMap) -> Circuit:
    """Expand CSWAP/CCX and insert the swaps a line-shaped Toffoli needs.

    A Toffoli whose two controls are not coupled, but which are both coupled
    to the target, is expanded so that its last two CX act on the controls;
    a SWAP between the target's and the second control's positions is
    inserted before that pair and *not* undone.  The resulting
    logical-to-physical permutation is stored in ``metadata["final_layout"]``.
    Any other two-qubit gate on an uncoupled pair is an error.
    """
    n = circuit.num_qubits
    pos = list(range(n))  # pos[wire] = physical qubit currently holding that wire
    out: list[GateOp] = []

    def emit(g: GateOp):
        out.append(GateOp(g.name, tuple(pos[q] for q in g.targets), g.params,
                          tuple((pos[q], p) for q, p in g.controls)))

    def toffoli(c1: int, c2: int, t: int):
        p1, p2, pt = pos[c1], pos[c2], pos[t]
        if coupling.coupled(p1, p2) and coupling.coupled(p1, pt) and coupling.coupled(p2, pt):
            emit(op("ccx", c1, c2, t))
            return
        if not (coupling.coupled(p1, pt) and coupling.coupled(p2, pt)):
            raise TranspileError(f"no routing preset for ccx on physical qubits {(p1, p2, pt)}")
        ops = toffoli_decompose(c1, c2, t)
        if not coupling.coupled(p1, p2):
            split = len(ops) - 4  # before the closing CX(c1,c2) T T^dagger CX(c1,c2)
            for g in ops[:split]:
                emit(g)
            out.append(op("swap", pos[t], pos[c2]))
            pos[t], pos[c2] = pos[c2], pos[t]
            for g in ops[split:]:
                emit(g)
        else:
            for g in ops:
                emit(g)

    for g in circuit.ops:
        if g.controls:
            if g.name is Gate.SWAP and len(g.controls) == 1 and g.controls[0][1] == 1:
                g = op("cswap", g.controls[0][0], *g.targets)
            elif g.name is Gate.X and len(g.controls) == 2 and all(p == 1 for _, p in g.controls):
                g = op("ccx", g.controls[0][0], g.controls[1][0], g.targets[0])
        if g.name is Gate.CSWAP and not g.controls:
            c, a, b = g.targets
            first, ccx, last = cswap_decompose(c, a, b)
            emit(first)
            toffoli(*ccx.targets)
            emit(last)
        elif g.name is Gate.CCX and not g.controls:
            toffoli(*g.targets)
        else:
            qs = [pos[q] for q in g.qubits]
            if len(qs) == 2 and not coupling.coupled(*qs):
                raise TranspileError(f"{g.name.value} on uncoupled physical pair {tuple(qs)}")
            if len(qs) > 2:
                raise TranspileError(f"no routing preset for {g.name.value} on {tuple(qs)}")
            emit(g)
    final = {q: pos[q] for q in range(n)}
    return circuit.replace_ops(out, final_layout=final)


def permutation_ops(final_layout: Mapping[int, int]) -> list[GateOp]:
    """Swaps that move every wire from ``final_layout[wire]`` back to ``wire``."""
    pos = dict(final_layout)
    at = {p: w for w, p in pos.items()}
    ops = []
    for w in sorted(pos):
        if pos[w] != w:
            other = at[w]
            ops.append(op("swap", pos[w], w))
            at[pos[w]], at[w] = other, w
            pos[other], pos[w] = pos[w], w
    return ops


# --------------------------------------------------------------------------
# unroll
# --------------------------------------------------------------------------

_PI = math.pi
_UNROLL_1Q = {
    Gate.H: lambda: ("u2", (0.0, _PI)),
    Gate.X: lambda: ("u3", (_PI, 0.0, _PI)),
    Gate.Y: lambda: ("u3", (_PI, _PI / 2, _PI / 2)),
    Gate.Z: lambda: ("u1", (_PI,)),
    Gate.S: lambda: ("u1", (_PI / 2,)),
    Gate.SDG: lambda: ("u1", (-_PI / 2,)),
    Gate.T: lambda: ("u1", (_PI / 4,)),
    Gate.TDG: lambda: ("u1", (-_PI / 4,)),
    Gate.RZ: lambda t: ("u1", (t,)),
    Gate.RX: lambda t: ("u3", (t, -_PI / 2, _PI / 2)),
    Gate.RY: lambda t: ("u3", (t, 0.0, 0.0)),
}


def _unroll_gate(g: GateOp) -> list[GateOp]:
    if any(p == 0 for _, p in g.controls):
        return [x for h in expand_polarity(g) for x in _unroll_gate(h)]
    name, ctrl = g.name, [q for q, _ in g.controls]
    if name in (Gate.MEASURE,) or (name in NATIVE and not ctrl):
        return [g]
    if name is Gate.RESET:
        raise TranspileError("reset has no unitary decomposition")
    if name is Gate.ID and not ctrl:
        return []
    if not ctrl:
        if name in _UNROLL_1Q:
            gate, params = _UNROLL_1Q[name](*g.params)
            return [op(gate, g.targets[0], params=params)]
        if name is Gate.CZ:
            c, t = g.targets
            return _unroll_all([op("h", t), op("cx", c, t), op("h", t)])
        if name is Gate.SWAP:
            a, b = g.targets
            return [op("cx", a, b), op("cx", b, a), op("cx", a, b)]
        if name is Gate.CCX:
            return _unroll_all(toffoli_decompose(*g.targets))
        if name is Gate.CSWAP:
            return _unroll_all(cswap_decompose(*g.targets))
    elif len(ctrl) == 1:
        c, t = ctrl[0], g.targets[0]
        if name is Gate.X:
            return [op("cx", c, t)]
        if name is Gate.Z:
            return _unroll_all([op("cz", c, t)])
        if name is Gate.SWAP:
            return _unroll_all([op("cswap", c, *g.targets)])
        if name is Gate.CX:
            return _unroll_all([op("ccx", c, *g.targets)])
        if name is Gate.RY:
            (th,) = g.params
            return _unroll_all([op("ry", t, params=(th / 2,)), op("cx", c, t),
                                op("ry", t, params=(-th / 2,)), op("cx", c, t)])
        if name is Gate.RZ:
            (th,) = g.params
            return _unroll_all([op("rz", t, params=(th / 2,)), op("cx", c, t),
                                op("rz", t, params=(-th / 2,)), op("cx", c, t)])
        if name is Gate.U1:
            (lam,) = g.params
            return [op("u1", c, params=(lam / 2,)), op("cx", c, t),
                    op("u1", t, params=(-lam / 2,)), op("cx", c, t), op("u1", t, params=(lam / 2,))]
    elif len(ctrl) == 2 and name is Gate.X:
        return _unroll_all(toffoli_decompose(ctrl[0], ctrl[1], g.targets[0]))
    label = ("c" * len(ctrl)) + name.value
    raise TranspileError(f"no decomposition for gate {label}")


def _unroll_all(ops: Sequence[GateOp]) -> list[GateOp]:
    return [x for g in ops for x in _unroll_gate(g)]


def unroll(circuit: Circuit) -> Circuit:
    return circuit.replace_ops(_unroll_all(circuit.ops))


def direct_cx(circuit: Circuit, coupling: CouplingMap) -> Circuit:
    """Flip cx gates that run against the coupling direction with Hadamard conjugation."""
    out: list[GateOp] = []
    h = ("u2", (0.0, _PI))
    for g in circuit.ops:
        if g.name is Gate.CX:
            c, t = g.targets
            if (c, t) in coupling.edges:
                out.append(g)
            elif (t, c) in coupling.edges:
                hs = [op(h[0], c, params=h[1]), op(h[0], t, params=h[1])]
                out += hs + [op("cx", t, c)] + hs
            else:
                raise TranspileError(f"cx({c},{t}) acts on an uncoupled pair")
        else:
            if len(g.qubits) > 1:
                raise TranspileError(f"{g.name.value} must be unrolled before direct_cx")
            out.append(g)
    return circuit.replace_ops(out)


# --------------------------------------------------------------------------
# single-qubit fusion
# --------------------------------------------------------------------------

def _wrap(a: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = math.remainder(a, 2 * _PI)
    return _PI if math.isclose(a, -_PI, abs_tol=ANGLE_ATOL) else a


def u3_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """(theta, phi, lam, gamma) with ``u = exp(i gamma) u3(theta, phi, lam)``."""
    a00, a01, a10, a11 = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
    theta = 2 * math.atan2(abs(a10), abs(a00))
    c, s = abs(a00), abs(a10)
    if s < 1e-14:
        gamma = cmath.phase(a00)
        return 0.0, 0.0, _wrap(cmath.phase(a11) - gamma), gamma
    if c < 1e-14:
        gamma = cmath.phase(a10)
        return theta, 0.0, _wrap(cmath.phase(-a01) - gamma), gamma
    gamma = cmath.phase(a00)
    phi = _wrap(cmath.phase(a10) - gamma)
    lam = _wrap(cmath.phase(-a01) - gamma)
    return theta, phi, lam, gamma


def simplify_1q(u: np.ndarray, qubit: int, atol: float = 1e-10) -> list[GateOp]:
    """Shortest native gate (u1, u2 or u3) equal to ``u`` up to phase; [] for identity."""
    theta, phi, lam, _ = u3_angles(u)
    if abs(theta) < atol:
        total = _wrap(phi + lam)
        return [] if abs(total) < atol else [op("u1", qubit, params=(total,))]
    if abs(theta - _PI / 2) < atol:
        return [op("u2", qubit, params=(phi, lam))]
    return [op("u3", qubit, params=(theta, phi, lam))]


def fuse_1q(circuit: Circuit) -> Circuit:
    """Merge each maximal run of single-qubit gates on a wire into one native gate."""
    pending: dict[int, list[GateOp]] = {}
    out: list[GateOp] = []

    def flush(q: int):
        run = pending.pop(q, [])
        if len(run) == 1:
            g = run[0]
            if g.name is Gate.U1 and abs(_wrap(g.params[0])) < 1e-10:
                return
            out.append(g)
        elif run:
            u = np.eye(2, dtype=complex)
            for g in run:
                u = base_matrix(g) @ u
            out.extend(simplify_1q(u, q))

    for g in circuit.ops:
        if g.name in (Gate.U1, Gate.U2, Gate.U3) and not g.controls:
            pending.setdefault(g.targets[0], []).append(g)
            continue
        if len(g.qubits) == 1 and not g.is_directive and not g.controls:
            raise TranspileError(f"fuse_1q expects native gates, found {g.name.value}")
        for q in g.qubits:
            flush(q)
        out.append(g)
    for q in sorted(pending):
        flush(q)
    return circuit.replace_ops(out)


# --------------------------------------------------------------------------
# pipeline and accounting
# --------------------------------------------------------------------------

def transpile(circuit: Circuit, coupling: CouplingMap | None = None, *, layout: bool = False) -> Circuit:
    """Route (if a coupling map is given), unroll, direct cx and fuse."""
    c = circuit
    if coupling is not None:
        if layout:
            c = apply_layout(c, coupling)
        c = route(c, coupling)
    c = unroll(c)
    if coupling is not None:
        c = direct_cx(c, coupling)
    return fuse_1q(c)


def count_gates(circuit: Circuit) -> dict[str, int]:
    return dict(Counter(g.name.value for g in circuit.ops))


def count_summary(circuit: Circuit) -> dict[str, int]:
    """Two-qubit ``cx`` count and total single-qubit gate count (measurements excluded)."""
    cx = sum(1 for g in circuit.ops if g.name is Gate.CX)
    one = sum(1 for g in circuit.ops if len(g.qubits) == 1 and not g.is_directive)
    return {"cx": cx, "1q": one}
