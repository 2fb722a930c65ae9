"""Distance-based quantum classifiers: Hadamard, swap-test and forking variants.

Register tables (little-endian qubit indices, lowest first):

* Hadamard state:  ``a | d (q) | l | m (w)``
* swap-test state: ``a | in (n*q) | d (n*q) | l | m (w)``
* forking circuit: ``a | in | d | l | m | anc (w-1) | x_1 | l_1 | ... | x_M | l_M``
* toy circuit:     ``a=0, d=1, in=2, m=3, l=4`` (the hand-picked device order)

with ``q = ceil(log2 N)`` data qubits and ``w = max(1, ceil(log2 M))``
index qubits.  Every classifier reads out ``<Z_a Z_l>``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from . import qstate
from .circuit import (
    STATEVECTOR_MAX_QUBITS,
    Circuit,
    GateOp,
    cswap_decompose,
    multi_controlled_swaps,
    op,
    simulate,
    state_preparation,
)
from .errors import CapacityError, SwapClfError
from .qstate import StateVector

NORM_ATOL = 1e-12


def n_data_qubits(N: int) -> int:
    return max(1, math.ceil(math.log2(N))) if N > 1 else 1


def n_index_qubits(M: int) -> int:
    return max(1, math.ceil(math.log2(M))) if M > 1 else 1


def encode_amplitude(raw: Sequence[complex]) -> StateVector:
    """Normalize ``raw`` and zero-pad it to ``2**ceil(log2 N)`` amplitudes."""
    v = np.asarray(raw, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if v.size == 0 or norm == 0:
        raise SwapClfError("cannot encode a zero vector")
    q = n_data_qubits(v.size)
    padded = np.zeros(2**q, dtype=complex)
    padded[: v.size] = v / norm
    return StateVector(q, padded)


@dataclass(frozen=True)
class Dataset:
    points: tuple[np.ndarray, ...]
    labels: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        pts = tuple(encode_amplitude(x).amplitudes for x in self.points)
        if not pts:
            raise SwapClfError("dataset needs at least one training point")
        if len({p.size for p in pts}) != 1:
            raise SwapClfError("training points have different dimensions")
        labels = tuple(int(y) for y in self.labels)
        if any(y not in (0, 1) for y in labels) or len(labels) != len(pts):
            raise SwapClfError("labels must be one bit per training point")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != len(pts) or np.any(w < 0):
            raise SwapClfError("weights must be non-negative, one per point")
        if abs(w.sum() - 1.0) > NORM_ATOL:
            raise SwapClfError(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_N", max(len(np.asarray(x).reshape(-1)) for x in self.points))

    @classmethod
    def from_arrays(cls, xs, ys, weights=None) -> "Dataset":
        xs = [np.asarray(x, dtype=complex) for x in xs]
        if weights is None:
            weights = np.full(len(xs), 1.0 / len(xs))
        else:
            weights = np.asarray(weights, dtype=float)
        return cls(tuple(xs), tuple(ys), weights)

    @property
    def M(self) -> int:
        return len(self.points)

    @property
    def N(self) -> int:
        return self.points[0].size

    @property
    def q(self) -> int:
        return n_data_qubits(self.points[0].size)


@dataclass(frozen=True)
class TestPoint:
    x: np.ndarray
    theta: float | None = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "x", encode_amplitude(self.x).amplitudes)


@dataclass(frozen=True)
class ClassifierSpec:
    kind: Literal["hadamard", "swaptest", "forking"] = "swaptest"
    copies: int = 1

    def __post_init__(self):
        if self.kind not in ("hadamard", "swaptest", "forking"):
            raise SwapClfError(f"unknown classifier kind {self.kind!r}")
        if self.copies < 1:
            raise SwapClfError("copies must be >= 1")
        if self.kind == "hadamard" and self.copies != 1:
            raise SwapClfError("the Hadamard classifier uses a single copy")


@dataclass(frozen=True)
class ClassifierOutcome:
    expectation: float
    label: int | str
    p0: float
    p1: float
    conditional: dict  # (b, a) -> P(label = b | ancilla = a)
    joint: np.ndarray  # P(a, l) indexed [a, l]


def assign_label(expectation: float, tie_epsilon: float = 0.0) -> int | str:
    """0 for a positive statistic, 1 for a negative one, ``"tie"`` inside the band."""
    if expectation > tie_epsilon:
        return 0
    if expectation < -tie_epsilon:
        return 1
    return "tie"


def outcome_from_joint(joint: np.ndarray, tie_epsilon: float = 0.0) -> ClassifierOutcome:
    """Build an outcome from the 4-entry distribution over ``(a, l)``."""
    pj = np.asarray(joint, dtype=float).reshape(2, 2)
    expectation = float(pj[0, 0] - pj[0, 1] - pj[1, 0] + pj[1, 1])
    p0, p1 = float(pj[0].sum()), float(pj[1].sum())
    cond = {}
    for a, pa in ((0, p0), (1, p1)):
        for b in (0, 1):
            cond[(b, a)] = float(pj[a, b] / pa) if pa > 0 else float("nan")
    return ClassifierOutcome(expectation, assign_label(expectation, tie_epsilon), p0, p1, cond, pj)


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------

def kernel_oracle(dataset: Dataset, test: TestPoint, n: int = 1,
                  variant: Literal["fidelity", "real-overlap"] = "fidelity") -> float:
    """Classical evaluation of the class-signed weighted kernel sum."""
    overlaps = np.array([np.vdot(test.x, x) for x in dataset.points])
    signs = np.array([(-1) ** y for y in dataset.labels], dtype=float)
    if variant == "fidelity":
        k = np.abs(overlaps) ** (2 * n)
    elif variant == "real-overlap":
        k = overlaps.real
    else:
        raise SwapClfError(f"unknown kernel variant {variant!r}")
    return float(np.sum(signs * dataset.weights * k))


def _tensor_power(v: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.kron, [v] * n)


def helstrom_operator(dataset: Dataset, n: int = 1):
    """Return ``(A, p0, rho0, p1, rho1)`` with ``A = p0 rho0 - p1 rho1``.

    A class with no training weight gets prior 0 and ``rho = None``.
    """
    dim = dataset.points[0].size ** n
    parts = {0: np.zeros((dim, dim), dtype=complex), 1: np.zeros((dim, dim), dtype=complex)}
    for x, y, w in zip(dataset.points, dataset.labels, dataset.weights):
        v = _tensor_power(x, n)
        parts[y] += w * np.outer(v, v.conj())
    priors = {i: float(sum(w for w, y in zip(dataset.weights, dataset.labels) if y == i)) for i in (0, 1)}
    rhos = {i: (parts[i] / priors[i] if priors[i] > 0 else None) for i in (0, 1)}
    return parts[0] - parts[1], priors[0], rhos[0], priors[1], rhos[1]


def helstrom_expectation(dataset: Dataset, test: TestPoint, n: int = 1) -> float:
    """tr(A |x~><x~|^{(x)n}) for the Helstrom observable A."""
    A = helstrom_operator(dataset, n)[0]
    v = _tensor_power(test.x, n)
    return float(np.vdot(v, A @ v).real)


# --------------------------------------------------------------------------
# direct state preparation
# --------------------------------------------------------------------------

def _check_width(num_qubits: int, cap: int | None):
    cap = STATEVECTOR_MAX_QUBITS if cap is None else cap
    if num_qubits > cap:
        raise CapacityError(f"{num_qubits} qubits exceeds the statevector cap {cap}", num_qubits, cap)


def _check_test(dataset: Dataset, test: TestPoint):
    if test.x.size != dataset.points[0].size:
        raise SwapClfError("test point and training data have different dimensions")


def hadamard_registers(dataset: Dataset) -> dict[str, tuple[int, ...]]:
    q, w = dataset.q, n_index_qubits(dataset.M)
    return {
        "a": (0,),
        "d": tuple(range(1, 1 + q)),
        "l": (1 + q,),
        "m": tuple(range(2 + q, 2 + q + w)),
    }


def prepare_hadamard_state(dataset: Dataset, test: TestPoint, max_qubits: int | None = None) -> StateVector:
    """1/sqrt2 sum_m sqrt(w_m) (|0>|x_m> + |1>|x~>) |y_m> |m>."""
    _check_test(dataset, test)
    q, w = dataset.q, n_index_qubits(dataset.M)
    n_qubits = 1 + q + 1 + w
    _check_width(n_qubits, max_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    d_idx = np.arange(2**q) << 1
    for m, (x, y, wt) in enumerate(zip(dataset.points, dataset.labels, dataset.weights)):
        base = (m << (q + 2)) | (y << (q + 1))
        amps[base | d_idx] += np.sqrt(wt / 2) * x
        amps[base | d_idx | 1] += np.sqrt(wt / 2) * test.x
    return StateVector(n_qubits, amps)


def swaptest_registers(dataset: Dataset, n: int) -> dict[str, tuple[int, ...]]:
    q, w = dataset.q, n_index_qubits(dataset.M)
    nq = n * q
    return {
        "a": (0,),
        "in": tuple(range(1, 1 + nq)),
        "d": tuple(range(1 + nq, 1 + 2 * nq)),
        "l": (1 + 2 * nq,),
        "m": tuple(range(2 + 2 * nq, 2 + 2 * nq + w)),
    }


def prepare_swaptest_state(dataset: Dataset, test: TestPoint, n: int = 1,
                           max_qubits: int | None = None) -> StateVector:
    """sum_m sqrt(w_m) |0>_a |x~>^n |x_m>^n |y_m> |m>."""
    if n < 1:
        raise SwapClfError("copies must be >= 1")
    _check_test(dataset, test)
    q, w = dataset.q, n_index_qubits(dataset.M)
    nq = n * q
    n_qubits = 2 + 2 * nq + w
    _check_width(n_qubits, max_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    xt = _tensor_power(test.x, n)
    block_idx = np.arange(2 ** (2 * nq)) << 1
    for m, (x, y, wt) in enumerate(zip(dataset.points, dataset.labels, dataset.weights)):
        block = np.kron(_tensor_power(x, n), xt)  # d high, in low
        base = (m << (2 * nq + 2)) | (y << (2 * nq + 1))
        amps[base | block_idx] += np.sqrt(wt) * block
    return StateVector(n_qubits, amps)


def _outcome(state, a: int, l: int, tie_epsilon: float) -> ClassifierOutcome:
    return outcome_from_joint(qstate.marginal_probabilities(state, [a, l]), tie_epsilon)


def run_hadamard(dataset: Dataset, test: TestPoint, tie_epsilon: float = 0.0) -> ClassifierOutcome:
    """Hadamard interference on the ancilla followed by the ``Z_a Z_l`` readout."""
    psi = prepare_hadamard_state(dataset, test)
    psi = qstate.apply_gate(psi, op("h", 0))
    regs = hadamard_registers(dataset)
    return _outcome(psi, regs["a"][0], regs["l"][0], tie_epsilon)


def swaptest_ops(a: int, tilde: Sequence[int], data: Sequence[int], decompose: bool = False) -> list[GateOp]:
    """H_a . c-swap^n . H_a between the test-copy and data-copy registers."""
    ops = [op("h", a)]
    for t, d in zip(tilde, data):
        ops += cswap_decompose(a, t, d) if decompose else [op("cswap", a, t, d)]
    return ops + [op("h", a)]


def run_swaptest(dataset: Dataset, test: TestPoint, n: int = 1, tie_epsilon: float = 0.0,
                 max_qubits: int | None = None) -> ClassifierOutcome:
    psi = prepare_swaptest_state(dataset, test, n, max_qubits)
    regs = swaptest_registers(dataset, n)
    circ = Circuit(psi.num_qubits, tuple(swaptest_ops(0, regs["in"], regs["d"])), regs)
    psi = simulate(circ, "statevector", psi, max_qubits=max_qubits)
    return _outcome(psi, regs["a"][0], regs["l"][0], tie_epsilon)


# --------------------------------------------------------------------------
# forking construction
# --------------------------------------------------------------------------

def forking_registers(M: int, N: int, n: int) -> dict[str, tuple[int, ...]]:
    q, w = n_data_qubits(N), n_index_qubits(M)
    nq = n * q
    regs: dict[str, tuple[int, ...]] = {}
    cursor = 0

    def take(name, size):
        nonlocal cursor
        regs[name] = tuple(range(cursor, cursor + size))
        cursor += size

    take("a", 1)
    take("in", nq)
    take("d", nq)
    take("l", 1)
    take("m", w)
    take("anc", w - 1)
    for k in range(1, M + 1):
        take(f"x_{k}", nq)
        take(f"l_{k}", 1)
    return regs


def forking_width(M: int, N: int, n: int) -> int:
    return sum(len(v) for v in forking_registers(M, N, n).values())


def build_forking_circuit(dataset: Dataset, test: TestPoint, n: int = 1, *,
                          decompose: bool = False, max_qubits: int | None = None) -> Circuit:
    """Product-state input, index-controlled swaps into (d, l), then the swap test.

    With ``decompose=True`` the index-controlled swaps become Toffoli ladders
    over the ``anc`` register and every controlled swap is expanded into
    CX-Toffoli-CX, matching the gate accounting in :mod:`swapclf.resources`.
    The circuit metadata records where the data-loading section ends.
    """
    _check_test(dataset, test)
    M, N = dataset.M, dataset.N
    regs = forking_registers(M, N, n)
    width = sum(len(v) for v in regs.values())
    if max_qubits is not None and width > max_qubits:
        raise CapacityError(
            f"forking circuit needs {width} qubits (budget {max_qubits})", width, max_qubits
        )
    q = dataset.q
    ops: list[GateOp] = []
    if M > 1:
        index_amps = np.zeros(2 ** len(regs["m"]))
        index_amps[:M] = np.sqrt(dataset.weights)
        ops += state_preparation(index_amps, regs["m"])
    for c in range(n):
        ops += state_preparation(test.x, regs["in"][c * q:(c + 1) * q])
    for k, (x, y) in enumerate(zip(dataset.points, dataset.labels), start=1):
        for c in range(n):
            ops += state_preparation(x, regs[f"x_{k}"][c * q:(c + 1) * q])
        if y:
            ops.append(op("x", regs[f"l_{k}"][0]))
    loading_end = len(ops)
    m_q = regs["m"]
    for m in range(M):
        ctrls = [(m_q[i], (m >> i) & 1) for i in range(len(m_q))]
        pairs = list(zip(regs["d"], regs[f"x_{m + 1}"])) + [(regs["l"][0], regs[f"l_{m + 1}"][0])]
        if decompose:
            ops += multi_controlled_swaps(ctrls, pairs, regs["anc"])
        else:
            ops += [op("swap", u, v, controls=ctrls) for u, v in pairs]
    ops += swaptest_ops(regs["a"][0], regs["in"], regs["d"], decompose=decompose)
    ops += [op("measure", regs["a"][0]), op("measure", regs["l"][0])]
    return Circuit(width, tuple(ops), regs, {"loading_end": loading_end, "copies": n})


def run_forking(dataset: Dataset, test: TestPoint, n: int = 1, *, decompose: bool = False,
                tie_epsilon: float = 0.0) -> ClassifierOutcome:
    circ = build_forking_circuit(dataset, test, n, decompose=decompose)
    a, l = circ.q("a"), circ.q("l")
    state = simulate(circ, "factored", observed=[a, l])
    return outcome_from_joint(state.marginal_probabilities([a, l]), tie_epsilon)


# --------------------------------------------------------------------------
# the two-point toy problem
# --------------------------------------------------------------------------

TOY_X1 = np.array([1j, 1]) / np.sqrt(2)
TOY_X2 = np.array([1j, -1]) / np.sqrt(2)


def toy_dataset(w2: float = 0.5) -> Dataset:
    return Dataset.from_arrays([TOY_X1, TOY_X2], [0, 1], [1.0 - w2, w2])


def toy_test_point(theta: float) -> TestPoint:
    return TestPoint(np.array([math.cos(theta / 2), -1j * math.sin(theta / 2)]), theta)


def toy_expectation(theta: float, w2: float = 0.5, n: int = 1) -> float:
    """Closed form w1 sin^2(theta/2 + pi/4)^n - w2 cos^2(theta/2 + pi/4)^n."""
    s = math.sin(theta / 2 + math.pi / 4) ** 2
    c = math.cos(theta / 2 + math.pi / 4) ** 2
    return (1 - w2) * s**n - w2 * c**n


def index_angle(w2: float) -> float:
    return 2 * math.asin(math.sqrt(w2))


TOY_REGISTERS = {"a": (0,), "d": (1,), "in": (2,), "m": (3,), "l": (4,)}


def build_toy_circuit(theta: float, alpha: float = math.pi / 2, measure: bool = True) -> Circuit:
    """Five-qubit swap-test classifier for the toy problem.

    ``alpha = 2 asin(sqrt(w2))`` sets the index weights through Ry(-alpha);
    the sign of the |1> amplitude does not reach the readout.  The d register is
    loaded with x_1 = (i|0> + |1>)/sqrt2 by H, Rz(-pi), S and flipped to x_2
    by the CZ from the index; the CX copies the index into the label.
    """
    a, d, tin, m, l = 0, 1, 2, 3, 4
    ops = [
        op("ry", m, params=(-alpha,)),
        op("h", d),
        op("rz", d, params=(-math.pi,)),
        op("s", d),
        op("cz", m, d),
        op("cx", m, l),
        op("rx", tin, params=(theta,)),
        op("h", a),
        op("cswap", a, tin, d),
        op("h", a),
    ]
    if measure:
        ops += [op("measure", a), op("measure", l)]
    return Circuit(5, tuple(ops), TOY_REGISTERS, {"theta": theta, "alpha": alpha})


def run_toy(theta: float, w2: float = 0.5) -> ClassifierOutcome:
    psi = simulate(build_toy_circuit(theta, index_angle(w2)))
    return _outcome(psi, 0, 4, 0.0)


# --------------------------------------------------------------------------
# data utilities
# --------------------------------------------------------------------------

def standardize(train: np.ndarray, test: np.ndarray | None = None):
    """Zero-mean, unit-variance per feature using the training statistics."""
    train = np.asarray(train, dtype=float)
    mu, sd = train.mean(axis=0), train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    out = (train - mu) / sd
    if test is None:
        return out
    return out, (np.asarray(test, dtype=float) - mu) / sd


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        re, im = v
        return complex(re, im)
    return complex(v)


def load_problem(path_or_text) -> tuple[Dataset, TestPoint | None]:
    """Read ``{"points": [{"x": [[re, im], ...], "y": 0|1, "w": float}], "test": {"x": [...]}}``."""
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and not path_or_text.lstrip().startswith("{")):
        text = Path(path_or_text).read_text()
    else:
        text = path_or_text
    doc = json.loads(text)
    xs = [np.array([_parse_complex(c) for c in p["x"]]) for p in doc["points"]]
    ys = [int(p["y"]) for p in doc["points"]]
    ws = [p.get("w") for p in doc["points"]]
    weights = None if all(w is None for w in ws) else [float(w) for w in ws]
    ds = Dataset.from_arrays(xs, ys, weights)
    test = None
    if doc.get("test") is not None:
        test = TestPoint(np.array([_parse_complex(c) for c in doc["test"]["x"]]), doc["test"].get("theta"))
    return ds, test


def dump_problem(dataset: Dataset, test: TestPoint | None = None) -> str:
    def enc(v):
        return [[float(c.real), float(c.imag)] for c in v]

    doc = {
        "points": [
            {"x": enc(x), "y": y, "w": float(w)}
            for x, y, w in zip(dataset.points, dataset.labels, dataset.weights)
        ]
    }
    if test is not None:
        doc["test"] = {"x": enc(test.x)}
    return json.dumps(doc)
