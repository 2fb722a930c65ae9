"""Dense state-vector and density-matrix substrate.

Qubit ordering is little-endian: qubit 0 is the least significant bit of the
basis index.  An amplitude array of ``n`` qubits is viewed as a tensor of
shape ``(2,) * n`` where tensor axis ``n - 1 - q`` belongs to qubit ``q``.

Gate matrices follow the textbook convention: for a matrix acting on
``targets = (t0, t1, ...)`` the first listed target is the most significant
bit of the matrix row/column index.  ``CX`` on ``(c, t)`` is therefore the
familiar ``[[1,0,0,0],[0,1,0,0],[0,0,0,1],[0,0,1,0]]``.

A density matrix over ``n`` qubits is handled as a ``2n``-qubit tensor
(column bits are qubits ``0..n-1``, row bits are qubits ``n..2n-1``) so the
same strided kernel serves both backends.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, SwapClfError

NORM_ATOL = 1e-12
TRACE_ATOL = 1e-10
HERMITIAN_ATOL = 1e-12
EIGEN_ATOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


# --------------------------------------------------------------------------
# strided kernel
# --------------------------------------------------------------------------

def apply_matrix_inplace(
    tensor: np.ndarray,
    num_qubits: int,
    matrix: np.ndarray,
    targets: Sequence[int],
    controls: Sequence[tuple[int, int]] = (),
) -> None:
    """Apply ``matrix`` to ``targets`` of a ``(2,)*num_qubits + batch`` tensor.

    ``controls`` is a sequence of ``(qubit, polarity)``; the matrix acts only
    on the slice where every control qubit equals its polarity.  Trailing
    batch axes (if any) are carried along untouched.
    """
    k = len(targets)
    idx: list = [slice(None)] * tensor.ndim
    control_axes = set()
    for q, pol in controls:
        ax = num_qubits - 1 - q
        idx[ax] = int(pol)
        control_axes.add(ax)
    view = tensor[tuple(idx)]
    remaining = [ax for ax in range(num_qubits) if ax not in control_axes]
    t_axes = [remaining.index(num_qubits - 1 - t) for t in targets]
    u = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    out = np.tensordot(u, view, axes=(list(range(k, 2 * k)), t_axes))
    out = np.moveaxis(out, list(range(k)), t_axes)
    view[...] = out


def _check_qubits(qubits: Iterable[int], num_qubits: int, what: str = "target") -> list[int]:
    qs = [int(q) for q in qubits]
    for q in qs:
        if q < 0 or q >= num_qubits:
            raise DimensionError(f"{what} qubit {q} out of range for {num_qubits} qubits")
    if len(set(qs)) != len(qs):
        raise DimensionError(f"duplicate {what} qubits {qs}")
    return qs


# --------------------------------------------------------------------------
# value types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_qubits:
            raise DimensionError(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, got {amps.size}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_ATOL * max(1, self.num_qubits):
            raise SwapClfError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size)))
        return cls(n, amps / np.linalg.norm(amps))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.num_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def kron(self, other: "StateVector") -> "StateVector":
        """``other`` occupies the low qubits, ``self`` the high ones."""
        return StateVector(self.num_qubits + other.num_qubits, np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = 2**self.num_qubits
        if m.shape != (dim, dim):
            raise DimensionError(f"expected {dim}x{dim} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def zero(cls, num_qubits: int) -> "DensityMatrix":
        m = np.zeros((2**num_qubits, 2**num_qubits), dtype=complex)
        m[0, 0] = 1.0
        return cls(num_qubits, m)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_valid(self, trace_atol: float = TRACE_ATOL, eig_atol: float = EIGEN_ATOL) -> bool:
        m = self.matrix
        if abs(self.trace() - 1.0) > trace_atol:
            return False
        if np.max(np.abs(m - m.conj().T), initial=0.0) > max(HERMITIAN_ATOL, trace_atol):
            return False
        return bool(np.linalg.eigvalsh((m + m.conj().T) / 2).min() >= -eig_atol)

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).clip(min=0.0)

    def fidelity_with_pure(self, psi: StateVector) -> float:
        return float(np.real(np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes)))


@dataclass(frozen=True)
class Observable:
    """Real linear combination of Pauli strings.

    ``terms`` holds ``(coefficient, {qubit: 'X'|'Y'|'Z'})`` pairs; qubits not
    named in a term carry the identity.
    """

    num_qubits: int
    terms: tuple[tuple[float, Mapping[int, str]], ...]

    def __post_init__(self):
        clean = []
        for coeff, paulis in self.terms:
            if isinstance(coeff, complex) or np.iscomplexobj(coeff):
                raise SwapClfError("observable coefficients must be real")
            ps = {int(q): p.upper() for q, p in dict(paulis).items() if p.upper() != "I"}
            _check_qubits(ps, self.num_qubits, "observable")
            for p in ps.values():
                if p not in PAULI:
                    raise SwapClfError(f"unknown Pauli label {p!r}")
            clean.append((float(coeff), ps))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def zz(cls, q1: int, q2: int, num_qubits: int) -> "Observable":
        return cls(num_qubits, ((1.0, {q1: "Z", q2: "Z"}),))

    @classmethod
    def from_label(cls, label: str, coeff: float = 1.0) -> "Observable":
        """Label characters are read left = highest qubit, e.g. ``"ZIZ"``."""
        n = len(label)
        return cls(n, ((coeff, {n - 1 - i: ch for i, ch in enumerate(label)}),))

    def bound(self) -> float:
        return sum(abs(c) for c, _ in self.terms)

    @property
    def qubits(self) -> set[int]:
        return {q for _, ps in self.terms for q in ps}


@dataclass
class Counts:
    """Measurement histogram.

    Keys are bit-strings whose ``i``-th character is the outcome of
    ``qubits[i]`` (so measuring ``[a, l]`` yields keys ``"al"``).
    """

    counts: dict[str, int]
    shots: int
    qubits: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise SwapClfError("counts do not sum to shots")

    def __getitem__(self, key: str) -> int:
        return self.counts.get(key, 0)

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def apply_unitary(state, matrix: np.ndarray, targets: Sequence[int],
                  controls: Sequence[tuple[int, int]] = ()):
    """Return a new state with ``matrix`` applied on ``targets``.

    Works for :class:`StateVector` and :class:`DensityMatrix`.
    """
    n = state.num_qubits
    targets = _check_qubits(targets, n)
    cq = _check_qubits([q for q, _ in controls], n, "control")
    if set(cq) & set(targets):
        raise DimensionError("control and target qubits overlap")
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** len(targets),) * 2:
        raise DimensionError(f"matrix shape {matrix.shape} does not match {len(targets)} targets")
    if isinstance(state, StateVector):
        t = state.amplitudes.copy().reshape((2,) * n)
        apply_matrix_inplace(t, n, matrix, targets, controls)
        out = t.reshape(-1)
        norm = float(np.vdot(out, out).real)
        if abs(norm - 1.0) > NORM_ATOL * max(1, n):
            raise SwapClfError(f"norm drifted to {norm!r}; matrix not unitary?")
        return StateVector(n, out)
    rho = state.matrix.copy().reshape((2,) * (2 * n))
    _conjugate_inplace(rho, n, matrix, targets, controls)
    return DensityMatrix(n, rho.reshape(2**n, 2**n))


def _conjugate_inplace(rho_t: np.ndarray, n: int, matrix: np.ndarray, targets, controls=()) -> None:
    """rho -> U rho U^dagger on the (2,)*2n tensor view."""
    row_t = [t + n for t in targets]
    row_c = [(q + n, p) for q, p in controls]
    apply_matrix_inplace(rho_t, 2 * n, matrix, row_t, row_c)
    apply_matrix_inplace(rho_t, 2 * n, matrix.conj(), targets, controls)


def apply_gate(state, gate):
    """Apply a :class:`~swapclf.circuit.GateOp` to a state (new object returned)."""
    from .circuit import gate_matrix  # local import; circuit depends on this module

    if gate.is_directive:
        raise DimensionError(f"{gate.name} is not a unitary gate")
    n = state.num_qubits
    _check_qubits(list(gate.targets) + [q for q, _ in gate.controls], n, "gate")
    return apply_unitary(state, gate_matrix(gate), gate.targets, gate.controls)


def apply_channel(rho: DensityMatrix, channel, targets: Sequence[int]) -> DensityMatrix:
    """rho -> sum_i K_i rho K_i^dagger on ``targets``."""
    n = rho.num_qubits
    targets = _check_qubits(targets, n)
    ops = channel.kraus if hasattr(channel, "kraus") else channel
    dim = 2 ** len(targets)
    base = rho.matrix.reshape((2,) * (2 * n))
    acc = np.zeros_like(base)
    for k in ops:
        k = np.asarray(k, dtype=complex)
        if k.shape != (dim, dim):
            raise DimensionError(f"Kraus operator shape {k.shape} does not match {len(targets)} targets")
        term = base.copy()
        _conjugate_inplace(term, n, k, targets)
        acc += term
    return DensityMatrix(n, acc.reshape(2**n, 2**n))


def _apply_pauli_string(t: np.ndarray, n: int, paulis: Mapping[int, str]) -> np.ndarray:
    out = t.copy()
    for q, p in paulis.items():
        apply_matrix_inplace(out, n, PAULI[p], [q])
    return out


def expectation(state, obs: Observable) -> float:
    """Expectation value of a Pauli-sum observable."""
    n = state.num_qubits
    if obs.num_qubits != n:
        raise DimensionError(f"observable has {obs.num_qubits} qubits, state has {n}")
    total = 0.0
    if isinstance(state, StateVector):
        psi = state.amplitudes
        t = psi.reshape((2,) * n)
        for coeff, ps in obs.terms:
            if all(p == "Z" for p in ps.values()):
                total += coeff * float(np.dot(state.probabilities(), _z_signs(n, ps)))
            else:
                phi = _apply_pauli_string(t, n, ps).reshape(-1)
                total += coeff * float(np.vdot(psi, phi).real)
        return total
    rho_t = state.matrix.reshape((2,) * (2 * n))
    for coeff, ps in obs.terms:
        # tr(P rho): apply P on the row index then take the trace
        prho = rho_t.copy()
        for q, p in ps.items():
            apply_matrix_inplace(prho, 2 * n, PAULI[p], [q + n])
        total += coeff * float(np.trace(prho.reshape(2**n, 2**n)).real)
    return total


def _z_signs(n: int, ps: Mapping[int, str]) -> np.ndarray:
    idx = np.arange(2**n)
    parity = np.zeros(2**n, dtype=np.int64)
    for q in ps:
        parity ^= (idx >> q) & 1
    return 1.0 - 2.0 * parity


def marginal_probabilities(state, qubits: Sequence[int]) -> np.ndarray:
    """Marginal distribution over ``qubits``.

    The result is indexed so that ``qubits[0]`` is the most significant bit,
    matching the bit-string keys of :class:`Counts`.
    """
    n = state.num_qubits
    qubits = _check_qubits(qubits, n, "measured")
    p = state.probabilities().reshape((2,) * n)
    keep_axes = [n - 1 - q for q in qubits]
    drop = tuple(ax for ax in range(n) if ax not in keep_axes)
    m = p.sum(axis=drop) if drop else p
    # remaining axes are in ascending axis order; permute into ``qubits`` order
    remaining = sorted(keep_axes)
    m = np.transpose(m, [remaining.index(ax) for ax in keep_axes])
    return m.reshape(-1)


def sample_counts(state, measured_qubits: Sequence[int], shots: int, seed: int) -> Counts:
    """Draw ``shots`` samples from the computational-basis marginal.

    Sampling is inverse-CDF over the marginal using ``numpy``'s PCG64 bit
    generator seeded with ``seed``; identical seeds give identical counts.
    """
    probs = marginal_probabilities(state, measured_qubits) if not isinstance(state, np.ndarray) else state
    return sample_from_probabilities(probs, len(measured_qubits), shots, seed, tuple(measured_qubits))


def sample_from_probabilities(probs: np.ndarray, num_bits: int, shots: int, seed: int,
                              qubits: tuple[int, ...] = ()) -> Counts:
    if shots <= 0:
        raise SwapClfError("shots must be positive")
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(shots)
    outcomes = np.searchsorted(cdf, u, side="right")
    outcomes = np.minimum(outcomes, probs.size - 1)
    tally = np.bincount(outcomes, minlength=probs.size)
    counts = {format(i, f"0{num_bits}b"): int(c) for i, c in enumerate(tally) if c}
    return Counts(counts, shots, qubits)


def partial_trace(state, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix over ``keep`` (result ordered little-endian by qubit index)."""
    n = state.num_qubits
    keep = sorted(_check_qubits(keep, n, "kept"))
    if not keep:
        raise DimensionError("keep set must be non-empty")
    k = len(keep)
    keep_axes = [n - 1 - q for q in reversed(keep)]  # most significant kept qubit first
    drop_axes = [ax for ax in range(n) if ax not in keep_axes]
    if isinstance(state, StateVector):
        t = np.transpose(state.tensor(), keep_axes + drop_axes).reshape(2**k, -1)
        return DensityMatrix(k, t @ t.conj().T)
    rho = state.matrix.reshape((2,) * (2 * n))
    perm = keep_axes + drop_axes
    rho = np.transpose(rho, perm + [n + ax for ax in perm])
    rho = rho.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
    return DensityMatrix(k, np.einsum("ajbj->ab", rho))


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """max |u - e^{i phi} v| minimized over a global phase (aligned via tr(v^dag u))."""
    ov = np.vdot(v, u)
    phase = ov / abs(ov) if abs(ov) > 1e-15 else 1.0
    return float(np.max(np.abs(u - phase * v)))
