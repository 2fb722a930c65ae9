"""Gate-level IR, gate library, decompositions and the simulate() entry point."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import qstate
from .errors import CapacityError, CircuitError
from .qstate import DensityMatrix, StateVector

STATEVECTOR_MAX_QUBITS = 28
DENSITY_MAX_QUBITS = 12


class Gate(str, Enum):
    ID = "id"
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    U1 = "u1"
    U2 = "u2"
    U3 = "u3"
    CX = "cx"
    CZ = "cz"
    CCX = "ccx"
    SWAP = "swap"
    CSWAP = "cswap"
    MEASURE = "measure"
    RESET = "reset"


# (number of targets, number of angle parameters)
ARITY = {
    Gate.ID: (1, 0), Gate.H: (1, 0), Gate.X: (1, 0), Gate.Y: (1, 0), Gate.Z: (1, 0),
    Gate.S: (1, 0), Gate.SDG: (1, 0), Gate.T: (1, 0), Gate.TDG: (1, 0),
    Gate.RX: (1, 1), Gate.RY: (1, 1), Gate.RZ: (1, 1),
    Gate.U1: (1, 1), Gate.U2: (1, 2), Gate.U3: (1, 3),
    Gate.CX: (2, 0), Gate.CZ: (2, 0), Gate.CCX: (3, 0),
    Gate.SWAP: (2, 0), Gate.CSWAP: (3, 0),
    Gate.MEASURE: (1, 0), Gate.RESET: (1, 0),
}

SINGLE_QUBIT = {g for g, (k, _) in ARITY.items() if k == 1} - {Gate.MEASURE, Gate.RESET}
NATIVE = {Gate.U1, Gate.U2, Gate.U3, Gate.CX}


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    ``targets`` are the qubits of the base gate in textbook order (for CX the
    control comes first).  ``controls`` are *additional* controls, each a
    ``(qubit, polarity)`` pair; polarity 0 means the gate fires on ``|0>``.
    """

    name: Gate
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    controls: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        try:
            name = Gate(self.name)
        except ValueError:
            raise CircuitError(f"unknown gate {self.name!r}") from None
        object.__setattr__(self, "name", name)
        targets = tuple(int(q) for q in self.targets)
        params = tuple(float(p) for p in self.params)
        controls = tuple((int(q), int(p)) for q, p in self.controls)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "controls", controls)
        nt, np_ = ARITY[name]
        if len(targets) != nt:
            raise CircuitError(f"{name.value} expects {nt} targets, got {len(targets)}")
        if len(params) != np_:
            raise CircuitError(f"{name.value} expects {np_} parameters, got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise CircuitError(f"{name.value} has non-finite parameters {params}")
        qs = list(targets) + [q for q, _ in controls]
        if len(set(qs)) != len(qs):
            raise CircuitError(f"{name.value} has duplicate qubits {qs}")
        if any(q < 0 for q in qs):
            raise CircuitError(f"{name.value} has negative qubit index")
        if any(p not in (0, 1) for _, p in controls):
            raise CircuitError("control polarity must be 0 or 1")
        if controls and name in (Gate.MEASURE, Gate.RESET):
            raise CircuitError(f"{name.value} cannot be controlled")

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + self.targets

    @property
    def is_directive(self) -> bool:
        return self.name in (Gate.MEASURE, Gate.RESET)

    def to_dict(self) -> dict:
        d = {"name": self.name.value, "targets": list(self.targets)}
        if self.params:
            d["params"] = list(self.params)
        if self.controls:
            d["controls"] = [q for q, _ in self.controls]
            d["polarities"] = [p for _, p in self.controls]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "GateOp":
        controls = d.get("controls", [])
        pols = d.get("polarities", [1] * len(controls))
        return cls(d["name"], tuple(d["targets"]), tuple(d.get("params", ())), tuple(zip(controls, pols)))


def op(name, *targets, params=(), controls=()) -> GateOp:
    """Shorthand constructor: ``op("cx", 0, 1)``."""
    return GateOp(Gate(name), tuple(targets), tuple(params), tuple(controls))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    registers: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "registers", {k: tuple(v) for k, v in dict(self.registers).items()})
        object.__setattr__(self, "metadata", dict(self.metadata))
        measured: set[int] = set()
        for g in ops:
            for q in g.qubits:
                if q >= self.num_qubits:
                    raise CircuitError(f"{g.name.value} touches qubit {q} outside {self.num_qubits}-qubit circuit")
                if q in measured:
                    raise CircuitError(f"qubit {q} used after measurement")
            if g.name is Gate.MEASURE:
                measured.add(g.targets[0])
        for name, qs in self.registers.items():
            if any(q >= self.num_qubits for q in qs):
                raise CircuitError(f"register {name} exceeds circuit width")

    def reg(self, name: str) -> tuple[int, ...]:
        return self.registers[name]

    def q(self, name: str) -> int:
        """The single qubit of a one-qubit register."""
        (qb,) = self.registers[name]
        return qb

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return tuple(g.targets[0] for g in self.ops if g.name is Gate.MEASURE)

    def without_measurements(self) -> "Circuit":
        return self.replace_ops([g for g in self.ops if g.name is not Gate.MEASURE])

    def replace_ops(self, ops: Iterable[GateOp], **meta) -> "Circuit":
        return Circuit(self.num_qubits, tuple(ops), self.registers, {**self.metadata, **meta})

    def __add__(self, other: "Circuit") -> "Circuit":
        return self.replace_ops(self.ops + tuple(other.ops))

    def to_json(self) -> str:
        return json.dumps(
            {
                "num_qubits": self.num_qubits,
                "registers": {k: list(v) for k, v in self.registers.items()},
                "ops": [g.to_dict() for g in self.ops],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        d = json.loads(text)
        return cls(
            d["num_qubits"],
            tuple(GateOp.from_dict(g) for g in d["ops"]),
            {k: tuple(v) for k, v in d.get("registers", {}).items()},
        )


# --------------------------------------------------------------------------
# gate matrices
# --------------------------------------------------------------------------

def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (lam + phi)) * c]],
        dtype=complex,
    )


def _rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    Gate.ID: np.eye(2, dtype=complex),
    Gate.H: np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    Gate.X: qstate.PAULI["X"],
    Gate.Y: qstate.PAULI["Y"],
    Gate.Z: qstate.PAULI["Z"],
    Gate.S: np.diag([1, 1j]),
    Gate.SDG: np.diag([1, -1j]),
    Gate.T: np.diag([1, np.exp(0.25j * math.pi)]),
    Gate.TDG: np.diag([1, np.exp(-0.25j * math.pi)]),
    Gate.CX: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    Gate.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    Gate.SWAP: np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_ccx = np.eye(8, dtype=complex)
_ccx[[6, 7]] = _ccx[[7, 6]]
_FIXED[Gate.CCX] = _ccx
_cswap = np.eye(8, dtype=complex)
_cswap[[5, 6]] = _cswap[[6, 5]]
_FIXED[Gate.CSWAP] = _cswap

_PARAM = {
    Gate.RX: _rx,
    Gate.RY: _ry,
    Gate.RZ: _rz,
    Gate.U1: lambda lam: u3_matrix(0.0, 0.0, lam),
    Gate.U2: lambda phi, lam: u3_matrix(math.pi / 2, phi, lam),
    Gate.U3: u3_matrix,
}


def base_matrix(g: GateOp) -> np.ndarray:
    """Unitary of the base gate on ``g.targets`` (ignores extra controls)."""
    if g.name in _FIXED:
        return _FIXED[g.name]
    if g.name in _PARAM:
        return _PARAM[g.name](*g.params)
    raise CircuitError(f"{g.name.value} has no unitary matrix")


gate_matrix = base_matrix


def controlled_matrix(base: np.ndarray, polarities: Sequence[int]) -> np.ndarray:
    """Full matrix with controls listed first (most significant)."""
    c = len(polarities)
    d = base.shape[0]
    full = np.eye(d * 2**c, dtype=complex)
    sel = int("".join(str(p) for p in polarities), 2) if c else 0
    full[sel * d:(sel + 1) * d, sel * d:(sel + 1) * d] = base
    return full


def full_matrix(g: GateOp) -> np.ndarray:
    """Unitary over ``g.qubits`` (controls first, then targets)."""
    return controlled_matrix(base_matrix(g), [p for _, p in g.controls])


def expand_polarity(g: GateOp) -> list[GateOp]:
    """Rewrite open (polarity 0) controls as X-sandwiches around a closed control."""
    flips = [q for q, p in g.controls if p == 0]
    if not flips:
        return [g]
    core = GateOp(g.name, g.targets, g.params, tuple((q, 1) for q, _ in g.controls))
    xs = [op("x", q) for q in flips]
    return xs + [core] + xs


# --------------------------------------------------------------------------
# decompositions
# --------------------------------------------------------------------------

def cswap_decompose(ctrl: int, a: int, b: int) -> list[GateOp]:
    """Controlled-swap as CX(b->a), CCX(ctrl, a -> b), CX(b->a)."""
    if len({ctrl, a, b}) != 3:
        raise CircuitError("cswap_decompose needs three distinct qubits")
    return [op("cx", b, a), op("ccx", ctrl, a, b), op("cx", b, a)]


def toffoli_decompose(c1: int, c2: int, t: int) -> list[GateOp]:
    """Standard six-CX Toffoli (Nielsen & Chuang Fig. 4.9) using H, T, T^dagger."""
    return [
        op("h", t),
        op("cx", c2, t), op("tdg", t),
        op("cx", c1, t), op("t", t),
        op("cx", c2, t), op("tdg", t),
        op("cx", c1, t), op("t", c2), op("t", t), op("h", t),
        op("cx", c1, c2), op("t", c1), op("tdg", c2),
        op("cx", c1, c2),
    ]


def _and_ladder(controls: Sequence[tuple[int, int]], ancillas: Sequence[int]) -> tuple[list[GateOp], int]:
    """Compute the AND of closed controls into ancillas; returns (ops, top qubit)."""
    qs = [q for q, _ in controls]
    if len(qs) == 1:
        return [], qs[0]
    ops = [op("ccx", qs[0], qs[1], ancillas[0])]
    for i, q in enumerate(qs[2:], start=1):
        ops.append(op("ccx", q, ancillas[i - 1], ancillas[i]))
    return ops, ancillas[len(qs) - 2]


def multi_controlled_swaps(
    controls: Sequence[tuple[int, int]],
    pairs: Sequence[tuple[int, int]],
    ancillas: Sequence[int] = (),
) -> list[GateOp]:
    """Several swaps sharing one multi-qubit control, via a Toffoli ladder.

    Open controls are X-sandwiched; ``len(controls) - 1`` clean ancillas are
    consumed and returned to ``|0>``.  Each swap becomes one Toffoli and two
    CX (see :func:`cswap_decompose`); the ladder adds ``2 (c - 1)`` Toffolis.
    """
    controls = [(int(q), int(p)) for q, p in controls]
    if not controls:
        raise CircuitError("at least one control required")
    need = len(controls) - 1
    if len(ancillas) < need:
        raise CapacityError(
            f"{len(controls)} controls need {need} ancillas, got {len(ancillas)}", need, len(ancillas)
        )
    used = set(q for q, _ in controls) | set(ancillas[:need]) | {q for p in pairs for q in p}
    if len(used) != len(controls) + need + 2 * len(pairs):
        raise CircuitError("controls, ancillas and swap qubits must be distinct")
    flips = [op("x", q) for q, p in controls if p == 0]
    compute, top = _and_ladder(controls, ancillas)
    body: list[GateOp] = []
    for a, b in pairs:
        body += cswap_decompose(top, a, b)
    return flips + compute + body + compute[::-1] + flips


def multi_controlled_swap(controls, a: int, b: int, ancillas: Sequence[int] = ()) -> list[GateOp]:
    return multi_controlled_swaps(controls, [(a, b)], ancillas)


def _uniform_tree_angles(mags: np.ndarray) -> list[tuple[int, int, float]]:
    """Binary-tree Ry angles for non-negative magnitudes.

    Returns ``(level, prefix, angle)``: at ``level`` (0 = most significant
    qubit) for the branch whose higher bits equal ``prefix``.
    """
    k = int(round(math.log2(mags.size)))
    out = []
    for level in range(k):
        width = 2 ** (k - level)
        for prefix in range(2**level):
            block = mags[prefix * width:(prefix + 1) * width]
            left = np.linalg.norm(block[: width // 2])
            right = np.linalg.norm(block[width // 2:])
            if left == 0 and right == 0:
                continue
            out.append((level, prefix, 2 * math.atan2(right, left)))
    return out


def state_preparation(amplitudes: Sequence[complex], qubits: Sequence[int]) -> list[GateOp]:
    """Ops mapping ``|0...0>`` on ``qubits`` (little-endian) to ``amplitudes`` exactly.

    Magnitudes come from a binary tree of (multi-)controlled Ry rotations;
    phases are then written basis state by basis state with controlled U1
    gates (X-conjugated where the low bit is 0), so even the global phase of
    the register is reproduced.
    """
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    k = len(qubits)
    if amps.size != 2**k:
        raise CircuitError(f"{amps.size} amplitudes do not fit {k} qubits")
    amps = amps / np.linalg.norm(amps)
    ops: list[GateOp] = []
    for level, prefix, angle in _uniform_tree_angles(np.abs(amps)):
        if abs(angle) < 1e-15:
            continue
        target = qubits[k - 1 - level]
        ctrls = tuple(
            (qubits[k - 1 - j], (prefix >> (level - 1 - j)) & 1) for j in range(level)
        )
        ops.append(op("ry", target, params=(angle,), controls=ctrls))
    low = qubits[0]
    for j, a in enumerate(amps):
        if abs(a) < 1e-15:
            continue
        phase = float(np.angle(a))
        if abs(phase) < 1e-15:
            continue
        ctrls = tuple((qubits[i], (j >> i) & 1) for i in range(1, k))
        g = op("u1", low, params=(phase,), controls=ctrls)
        ops += [g] if j & 1 else [op("x", low), g, op("x", low)]
    return ops


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------

def simulate(circuit: Circuit, backend: str = "statevector", initial=None, *,
             max_qubits: int | None = None, observed: Iterable[int] | None = None):
    """Run every non-measurement op and return the final state.

    ``backend`` is ``"statevector"``, ``"density"`` or ``"factored"``.  The
    factored backend returns a :class:`~swapclf.factored.BranchedState` and
    needs ``observed`` (qubits whose joint state must stay exact).
    """
    n = circuit.num_qubits
    if backend == "factored":
        from .factored import simulate_factored

        return simulate_factored(circuit, observed=observed if observed is not None else range(n))
    if backend in ("statevector", "sv"):
        cap = STATEVECTOR_MAX_QUBITS if max_qubits is None else max_qubits
        if n > cap:
            raise CapacityError(f"{n} qubits exceeds statevector cap {cap}", n, cap)
        state = StateVector.zero(n) if initial is None else initial
        if state.num_qubits != n:
            raise CircuitError("initial state width does not match circuit")
        t = state.amplitudes.copy().reshape((2,) * n)
        for g in circuit.ops:
            if g.name is Gate.MEASURE:
                continue
            if g.name is Gate.RESET:
                raise CircuitError("reset is not unitary; use the density backend")
            qstate.apply_matrix_inplace(t, n, base_matrix(g), g.targets, g.controls)
        return StateVector(n, t.reshape(-1))
    if backend in ("density", "density-matrix", "dm"):
        cap = DENSITY_MAX_QUBITS if max_qubits is None else max_qubits
        if n > cap:
            raise CapacityError(f"{n} qubits exceeds density-matrix cap {cap}", n, cap)
        rho = DensityMatrix.zero(n) if initial is None else initial
        if isinstance(rho, StateVector):
            rho = rho.to_density_matrix()
        for g in circuit.ops:
            if g.name is Gate.MEASURE:
                continue
            if g.name is Gate.RESET:
                rho = qstate.apply_channel(rho, RESET_KRAUS, g.targets)
                continue
            rho = qstate.apply_unitary(rho, base_matrix(g), g.targets, g.controls)
        return rho
    raise CircuitError(f"unknown backend {backend!r}")


RESET_KRAUS = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 1], [0, 0]], dtype=complex),
)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of a measurement-free circuit (little-endian basis)."""
    n = circuit.num_qubits
    if n > 12:
        raise CapacityError(f"unitary of {n} qubits is too large", n, 12)
    t = np.eye(2**n, dtype=complex).reshape((2,) * n + (2**n,))
    for g in circuit.ops:
        if g.is_directive:
            if g.name is Gate.MEASURE:
                continue
            raise CircuitError("reset has no unitary")
        qstate.apply_matrix_inplace(t, n, base_matrix(g), g.targets, g.controls)
    return t.reshape(2**n, 2**n)


def ops_unitary(ops: Sequence[GateOp], num_qubits: int) -> np.ndarray:
    return circuit_unitary(Circuit(num_qubits, tuple(ops)))
