"""Exact factorized state-vector backend.

The state is kept as a tensor product of dense factors; a gate only merges
the factors it touches, and an uncontrolled SWAP is a relabeling.  Controls
sitting on qubits in a computational basis state are resolved classically.

When a control qubit is in superposition but, from that op on, is never
touched by anything except controls and diagonal/permutation one-qubit
gates, and is not observed, the simulation splits into two weighted
branches with that qubit projected onto ``|0>`` and ``|1>``.  This is the
deferred-measurement identity: measuring such a qubit early leaves the
reduced state of every other qubit unchanged.  Index registers of the
forking construction are exactly of this kind, so each training point is
simulated on its own branch without ever materializing the junk registers
jointly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import qstate
from .circuit import Circuit, Gate, GateOp, base_matrix, op
from .errors import CircuitError, DimensionError
from .qstate import DensityMatrix, Observable, StateVector

_ZERO = 1e-13
_DIAGONAL = {Gate.ID, Gate.Z, Gate.S, Gate.SDG, Gate.T, Gate.TDG, Gate.U1, Gate.RZ}
_MONOMIAL_1Q = _DIAGONAL | {Gate.X, Gate.Y}


def canonical(g: GateOp) -> GateOp:
    """Move built-in controls (CX, CZ, CCX, CSWAP) into ``controls``."""
    name = g.name
    if name is Gate.CX:
        return op("x", g.targets[1], controls=g.controls + ((g.targets[0], 1),))
    if name is Gate.CZ:
        return op("z", g.targets[1], controls=g.controls + ((g.targets[0], 1),))
    if name is Gate.CCX:
        return op("x", g.targets[2], controls=g.controls + ((g.targets[0], 1), (g.targets[1], 1)))
    if name is Gate.CSWAP:
        return op("swap", *g.targets[1:], controls=g.controls + ((g.targets[0], 1),))
    return g


@dataclass
class Factor:
    qubits: list[int]  # little-endian: qubits[0] is the least significant local bit
    tensor: np.ndarray  # shape (2,) * len(qubits)

    def axis(self, q: int) -> int:
        return len(self.qubits) - 1 - self.qubits.index(q)


class FactoredState:
    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.of: dict[int, Factor] = {}
        for q in range(num_qubits):
            self.of[q] = Factor([q], np.array([1.0, 0.0], dtype=complex))

    # ------------------------------------------------------------------
    def factors(self) -> list[Factor]:
        seen, out = set(), []
        for f in self.of.values():
            if id(f) not in seen:
                seen.add(id(f))
                out.append(f)
        return out

    def copy(self) -> "FactoredState":
        new = FactoredState.__new__(FactoredState)
        new.num_qubits = self.num_qubits
        new.of = {}
        for f in self.factors():
            g = Factor(list(f.qubits), f.tensor.copy())
            for q in g.qubits:
                new.of[q] = g
        return new

    def _merge(self, qubits: Iterable[int]) -> Factor:
        fs = []
        for q in qubits:
            f = self.of[q]
            if all(f is not g for g in fs):
                fs.append(f)
        merged = fs[0]
        for f in fs[1:]:
            merged = Factor(merged.qubits + f.qubits, np.multiply.outer(f.tensor, merged.tensor))
        for q in merged.qubits:
            self.of[q] = merged
        return merged

    def probability_one(self, q: int) -> float:
        f = self.of[q]
        p = np.abs(f.tensor) ** 2
        ax = f.axis(q)
        return float(np.take(p, 1, axis=ax).sum())

    def classical_value(self, q: int) -> int | None:
        f = self.of[q]
        if len(f.qubits) == 1:
            a0, a1 = abs(f.tensor[0]), abs(f.tensor[1])
            if a1 < _ZERO:
                return 0
            if a0 < _ZERO:
                return 1
            return None
        p1 = self.probability_one(q)
        if p1 < _ZERO**2:
            self.project(q, 0)
            return 0
        if 1 - p1 < _ZERO**2:
            self.project(q, 1)
            return 1
        return None

    def project(self, q: int, bit: int) -> float:
        """Project qubit ``q`` onto ``|bit>``, split it out and renormalize; returns the probability."""
        f = self.of[q]
        ax = f.axis(q)
        rest = np.take(f.tensor, bit, axis=ax)
        prob = float(np.vdot(rest, rest).real)
        if prob <= 0:
            raise DimensionError(f"projection of qubit {q} onto {bit} has zero probability")
        others = [x for x in f.qubits if x != q]
        if others:
            g = Factor(others, rest / np.sqrt(prob))
            for x in others:
                self.of[x] = g
        basis = np.zeros(2, dtype=complex)
        basis[bit] = 1.0
        self.of[q] = Factor([q], basis)
        return prob

    # ------------------------------------------------------------------
    def apply(self, g: GateOp, may_branch=lambda q: False):
        """Apply a canonical gate.  Returns a qubit index if a branch split is needed first."""
        live = []
        for q, pol in g.controls:
            v = self.classical_value(q)
            if v is None:
                live.append((q, pol))
            elif v != pol:
                return None
        for q, _ in live:
            if may_branch(q):
                return q
        if g.name is Gate.SWAP and not live:
            self._relabel_swap(*g.targets)
            return None
        f = self._merge([q for q, _ in live] + list(g.targets))
        m = len(f.qubits)
        loc = {q: i for i, q in enumerate(f.qubits)}
        qstate.apply_matrix_inplace(
            f.tensor, m, base_matrix(g), [loc[t] for t in g.targets], [(loc[q], p) for q, p in live]
        )
        return None

    def _relabel_swap(self, a: int, b: int) -> None:
        fa, fb = self.of[a], self.of[b]
        ia, ib = fa.qubits.index(a), fb.qubits.index(b)
        fa.qubits[ia] = b
        fb.qubits[ib] = a
        self.of[a], self.of[b] = fb, fa

    # ------------------------------------------------------------------
    def factor_state(self, f: Factor) -> StateVector:
        return StateVector(len(f.qubits), f.tensor.reshape(-1))

    def expectation(self, obs: Observable) -> float:
        total = 0.0
        for coeff, ps in obs.terms:
            val = coeff
            groups: dict[int, tuple[Factor, dict]] = {}
            for q, p in ps.items():
                f = self.of[q]
                groups.setdefault(id(f), (f, {}))[1][f.qubits.index(q)] = p
            for f, local in groups.values():
                sub = Observable(len(f.qubits), ((1.0, local),))
                val *= qstate.expectation(self.factor_state(f), sub)
            total += val
        return total

    def reduced_density_matrix(self, keep: Sequence[int]) -> DensityMatrix:
        keep = sorted(set(keep))
        order: list[int] = []
        rho = np.ones((1, 1), dtype=complex)
        done = set()
        for q in keep:
            f = self.of[q]
            if id(f) in done:
                continue
            done.add(id(f))
            local = [i for i, x in enumerate(f.qubits) if x in keep]
            part = qstate.partial_trace(self.factor_state(f), local)
            rho = np.kron(part.matrix, rho)  # new factor on the high side
            order += [f.qubits[i] for i in sorted(local)]
        return _reorder_dm(rho, order, keep)

    def to_statevector(self) -> StateVector:
        f = self._merge(range(self.num_qubits))
        n = self.num_qubits
        # axis for local index i is n-1-i; want axis for global q at n-1-q
        perm = [n - 1 - f.qubits[n - 1 - ax] for ax in range(n)]
        t = np.transpose(f.tensor, np.argsort(perm))
        return StateVector(n, t.reshape(-1))


def _reorder_dm(rho: np.ndarray, order: list[int], target: list[int]) -> DensityMatrix:
    """``rho`` is little-endian over ``order``; return it little-endian over ``target``."""
    k = len(order)
    t = rho.reshape((2,) * (2 * k))
    # current axis for order[i] is k-1-i ; desired axis for target[j] is k-1-j
    src = [k - 1 - order.index(target[k - 1 - ax]) for ax in range(k)]
    t = np.transpose(t, src + [k + s for s in src])
    return DensityMatrix(k, t.reshape(2**k, 2**k))


@dataclass
class BranchedState:
    """Probabilistic mixture of factored pure states."""

    num_qubits: int
    branches: list[tuple[float, FactoredState]]
    branched_qubits: set[int] = field(default_factory=set)

    def expectation(self, obs: Observable) -> float:
        return float(sum(p * s.expectation(obs) for p, s in self.branches))

    def reduced_density_matrix(self, keep: Sequence[int]) -> DensityMatrix:
        if set(keep) & self.branched_qubits:
            raise DimensionError(
                f"qubits {sorted(set(keep) & self.branched_qubits)} were dephased by branching; "
                "pass them as observed"
            )
        acc = sum(p * s.reduced_density_matrix(keep).matrix for p, s in self.branches)
        return DensityMatrix(len(set(keep)), acc)

    def marginal_probabilities(self, qubits: Sequence[int]) -> np.ndarray:
        rho = self.reduced_density_matrix(qubits)
        return qstate.marginal_probabilities(rho, _positions(qubits))

    @property
    def total_probability(self) -> float:
        return float(sum(p for p, _ in self.branches))


def _positions(qubits: Sequence[int]) -> list[int]:
    """Index of each qubit inside the sorted reduced state."""
    s = sorted(qubits)
    return [s.index(q) for q in qubits]


def _control_like(g: GateOp, q: int) -> bool:
    if q in dict(g.controls):
        return True
    if g.name in _DIAGONAL:
        return True
    return g.name in _MONOMIAL_1Q and not g.controls and g.targets == (q,)


def simulate_factored(circuit: Circuit, observed: Iterable[int]) -> BranchedState:
    observed = set(observed)
    ops = []
    for g in circuit.ops:
        if g.name is Gate.MEASURE:
            continue
        if g.name is Gate.RESET:
            raise CircuitError("reset is not supported by the factored backend")
        ops.append(canonical(g))
    n = circuit.num_qubits
    # safe_from[q]: first op index from which q is only used control-like
    safe_from = {q: 0 for q in range(n)}
    for q in range(n):
        for j in range(len(ops) - 1, -1, -1):
            if q in ops[j].qubits and not _control_like(ops[j], q):
                safe_from[q] = j + 1
                break
    done: list[tuple[float, FactoredState]] = []
    branched: set[int] = set()
    stack = [(1.0, FactoredState(n), 0)]
    while stack:
        prob, state, i = stack.pop()
        while i < len(ops):
            q = state.apply(ops[i], lambda c, i=i: c not in observed and safe_from[c] <= i)
            if q is None:
                i += 1
                continue
            branched.add(q)
            p1 = state.probability_one(q)
            for bit, pb in ((1, p1), (0, 1.0 - p1)):
                if pb > 1e-15:
                    s = state.copy()
                    s.project(q, bit)
                    stack.append((prob * pb, s, i))
            break
        else:
            done.append((prob, state))
    return BranchedState(n, done, branched)
