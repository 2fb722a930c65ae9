"""Device noise model: readout, depolarizing and thermal relaxation channels.

Units: relaxation and gate times enter the channel formulas as a ratio
``Tg / T``, so any consistent unit works.  :class:`DeviceParams` stores the
calibration table units (microseconds for T1/T2, nanoseconds for gate
times) and :func:`build_noise_model` converts to nanoseconds.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import qstate
from .circuit import Circuit, Gate, GateOp, base_matrix
from .errors import NoiseModelError
from .qstate import PAULI, Counts, DensityMatrix

log = logging.getLogger(__name__)

PLANCK_EV_S = 4.135667696e-15  # eV s
BOLTZMANN_EV_K = 8.617333262e-5  # eV / K

CPTP_ATOL = 1e-9
EIG_ATOL = 1e-9


# --------------------------------------------------------------------------
# device calibration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QubitParams:
    t1_us: float
    t2_us: float
    freq_ghz: float
    readout_error: float
    gate_error: float
    gate_time_u2_ns: float
    temperature_k: float = 0.0
    name: str = ""

    def __post_init__(self):
        for key in ("t1_us", "t2_us", "gate_time_u2_ns", "temperature_k"):
            if getattr(self, key) < 0:
                raise NoiseModelError(f"{self.name or 'qubit'}: {key} must be non-negative")
        for key in ("readout_error", "gate_error"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise NoiseModelError(f"{self.name or 'qubit'}: {key} must lie in [0, 1]")
        if self.t2_us > 2 * self.t1_us:
            raise NoiseModelError(f"{self.name or 'qubit'}: T2 > 2 T1 is unphysical")


@dataclass(frozen=True)
class PairParams:
    qubits: tuple[int, int]
    gate_error_cx: float
    gate_time_cx_ns: float

    def __post_init__(self):
        if not 0.0 <= self.gate_error_cx <= 1.0:
            raise NoiseModelError(f"cx{self.qubits}: gate_error_cx must lie in [0, 1]")
        if self.gate_time_cx_ns < 0:
            raise NoiseModelError(f"cx{self.qubits}: gate_time_cx_ns must be non-negative")


@dataclass(frozen=True)
class DeviceParams:
    qubits: tuple[QubitParams, ...]
    pairs: tuple[PairParams, ...]
    name: str = ""
    calibrated: str = ""

    def __post_init__(self):
        for p in self.pairs:
            if any(not 0 <= q < len(self.qubits) for q in p.qubits):
                raise NoiseModelError(f"pair {p.qubits} references a missing qubit")

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def pair(self, control: int, target: int) -> PairParams:
        for p in self.pairs:
            if p.qubits == (control, target):
                return p
        for p in self.pairs:
            if p.qubits == (target, control):
                return p
        raise NoiseModelError(f"no cx calibration for pair ({control}, {target})")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DeviceParams":
        try:
            qubits = tuple(
                QubitParams(
                    float(q["t1_us"]), float(q["t2_us"]), float(q["freq_ghz"]),
                    float(q["readout_error"]), float(q["gate_error"]),
                    float(q["gate_time_u2_ns"]), float(q.get("temperature_k", 0.0)),
                    q.get("name", f"Q{i}"),
                )
                for i, q in enumerate(doc["qubits"])
            )
            pairs = tuple(
                PairParams(tuple(int(x) for x in p["qubits"]), float(p["gate_error_cx"]),
                           float(p["gate_time_cx_ns"]))
                for p in doc.get("pairs", [])
            )
        except KeyError as e:
            raise NoiseModelError(f"device document is missing field {e.args[0]!r}") from None
        return cls(qubits, pairs, doc.get("name", ""), doc.get("calibrated", ""))

    @classmethod
    def load(cls, path: str | Path) -> "DeviceParams":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except OSError as e:
            raise NoiseModelError(f"cannot read device file {path}: {e.strerror}") from None
        return cls.from_dict(doc)


BUNDLED_DEVICE = "ibmq_ourense_2019-09-29"


def bundled_device_path(name: str = BUNDLED_DEVICE) -> str:
    return str(resources.files("swapclf.data").joinpath(f"{name}.json"))


def bundled_device(name: str = BUNDLED_DEVICE) -> DeviceParams:
    return DeviceParams.load(bundled_device_path(name))


# --------------------------------------------------------------------------
# channels
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KrausChannel:
    """Kraus representation; ``right`` is set only for non-CP maps from an SVD."""

    kraus: tuple[np.ndarray, ...]
    arity: int
    cptp: bool
    right: tuple[np.ndarray, ...] | None = None
    mixture: dict | None = field(default=None, compare=False)

    @classmethod
    def from_ops(cls, ops: Sequence[np.ndarray], **kw) -> "KrausChannel":
        ops = tuple(np.asarray(k, dtype=complex) for k in ops)
        dim = ops[0].shape[0]
        arity = int(round(math.log2(dim)))
        return cls(ops, arity, completeness_error(ops) < CPTP_ATOL, **kw)

    def apply(self, rho: DensityMatrix, targets: Sequence[int]) -> DensityMatrix:
        if self.right is None:
            return qstate.apply_channel(rho, self.kraus, targets)
        return _apply_left_right(rho, self.kraus, self.right, targets)

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        """Act on a bare ``2**arity`` square matrix."""
        right = self.kraus if self.right is None else self.right
        return sum(kl @ rho @ kr.conj().T for kl, kr in zip(self.kraus, right))

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Composite map: ``self`` first, ``other`` second."""
        if self.arity != other.arity:
            raise NoiseModelError("cannot compose channels of different arity")
        if self.right is not None or other.right is not None:
            raise NoiseModelError("composition of non-CP channels is not supported")
        ops = [b @ a for a in self.kraus for b in other.kraus]
        return KrausChannel.from_ops(ops)

    def choi(self) -> np.ndarray:
        return choi_from_kraus(self.kraus, self.right)


def completeness_error(kraus: Sequence[np.ndarray]) -> float:
    dim = kraus[0].shape[0]
    s = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(s - np.eye(dim))))


def _apply_left_right(rho: DensityMatrix, left, right, targets) -> DensityMatrix:
    n = rho.num_qubits
    dim = 2**n
    eye = np.eye(dim, dtype=complex)
    acc = np.zeros((dim, dim), dtype=complex)
    for kl, kr in zip(left, right):
        L = _embed(kl, targets, n, eye)
        R = _embed(kr, targets, n, eye)
        acc += L @ rho.matrix @ R.conj().T
    return DensityMatrix(n, acc)


def _embed(k: np.ndarray, targets: Sequence[int], n: int, eye: np.ndarray) -> np.ndarray:
    t = eye.copy().reshape((2,) * n + (2**n,))
    qstate.apply_matrix_inplace(t, n, k, list(targets))
    return t.reshape(2**n, 2**n)


def choi_from_kraus(left: Sequence[np.ndarray], right: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Lambda = sum_i vec(K_i) vec(K_i)^dagger with column-major ``vec``."""
    right = left if right is None else right
    return sum(
        np.outer(kl.reshape(-1, order="F"), kr.reshape(-1, order="F").conj())
        for kl, kr in zip(left, right)
    )


def apply_choi(choi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """E(rho) = tr_1[Lambda (rho^T (x) I)], the input system being the first factor."""
    d = rho.shape[0]
    big = choi @ np.kron(rho.T, np.eye(d))
    return np.einsum("iaib->ab", big.reshape(d, d, d, d))


def _unvec(v: np.ndarray, n: int) -> np.ndarray:
    return v.reshape(n, n, order="F")


def choi_to_kraus(choi: np.ndarray, atol: float = EIG_ATOL) -> KrausChannel:
    """Kraus maps from a Choi matrix.

    Hermitian PSD input uses the eigendecomposition ``K = sqrt(lambda) Phi(v)``;
    anything else falls back to the SVD, returning left and right sets that
    are flagged non-CPTP unless they coincide.
    """
    choi = np.asarray(choi, dtype=complex)
    d2 = choi.shape[0]
    n = int(round(math.sqrt(d2)))
    if choi.shape != (d2, d2) or n * n != d2:
        raise NoiseModelError(f"Choi matrix must be n^2 x n^2, got {choi.shape}")
    hermitian = np.max(np.abs(choi - choi.conj().T)) < 1e-12
    if hermitian:
        vals, vecs = np.linalg.eigh(choi)
        if vals.min() >= -atol:
            keep = vals > atol * 1e-3
            ops = [np.sqrt(lam) * _unvec(vecs[:, i], n) for i, lam in enumerate(vals) if keep[i]]
            if not ops:
                ops = [np.zeros((n, n), dtype=complex)]
            return KrausChannel.from_ops(ops)
    u, s, vh = np.linalg.svd(choi)
    v = vh.conj().T
    keep = s > atol * 1e-3
    left = tuple(np.sqrt(s[i]) * _unvec(u[:, i], n) for i in range(d2) if keep[i])
    right = tuple(np.sqrt(s[i]) * _unvec(v[:, i], n) for i in range(d2) if keep[i])
    same = all(np.allclose(a, b, atol=1e-12) for a, b in zip(left, right))
    cptp = same and completeness_error(left) < CPTP_ATOL
    return KrausChannel(left, int(round(math.log2(n))), cptp, None if same else right)


def pauli_strings(arity: int) -> list[np.ndarray]:
    """All ``4**arity`` Pauli strings, identity first."""
    ps = [PAULI[c] for c in "IXYZ"]
    return [reduce(np.kron, combo) for combo in itertools.product(ps, repeat=arity)]


def depolarizing_channel(p: float, arity: int = 1) -> KrausChannel:
    if not 0.0 <= p <= 1.0:
        raise NoiseModelError(f"depolarizing probability {p!r} outside [0, 1]")
    d2 = 4**arity
    paulis = pauli_strings(arity)
    ops = [math.sqrt(1 - (d2 - 1) * p / d2) * paulis[0]]
    if p > 0:
        ops += [math.sqrt(p / d2) * P for P in paulis[1:]]
    return KrausChannel.from_ops(ops)


def bit_flip_channel(p: float) -> KrausChannel:
    if not 0.0 <= p <= 1.0:
        raise NoiseModelError(f"flip probability {p!r} outside [0, 1]")
    return KrausChannel.from_ops([math.sqrt(1 - p) * PAULI["I"], math.sqrt(p) * PAULI["X"]])


def phase_flip_channel(p: float) -> KrausChannel:
    if not 0.0 <= p <= 1.0:
        raise NoiseModelError(f"flip probability {p!r} outside [0, 1]")
    return KrausChannel.from_ops([math.sqrt(1 - p) * PAULI["I"], math.sqrt(p) * PAULI["Z"]])


def excited_population(freq_ghz: float, temperature_k: float) -> float:
    """Thermal excited-state population (1 + exp(2hf / k_B T))^-1."""
    if freq_ghz <= 0:
        raise NoiseModelError("qubit frequency must be positive")
    if temperature_k < 0:
        raise NoiseModelError("temperature must be non-negative")
    if temperature_k == 0:
        return 0.0
    x = 2 * PLANCK_EV_S * freq_ghz * 1e9 / (BOLTZMANN_EV_K * temperature_k)
    if x > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


def _clamp(p: float, what: str) -> float:
    if p < 0.0 or p > 1.0:
        log.warning("%s depolarizing probability %.6g clamped to [0, 1]", what, p)
        return min(max(p, 0.0), 1.0)
    return p


def _check_relaxation(t1: float, t2: float, tg: float) -> None:
    if tg < 0:
        raise NoiseModelError("gate time must be non-negative")
    if t1 < 0 or t2 < 0:
        raise NoiseModelError("relaxation times must be non-negative")
    if t2 > 2 * t1:
        raise NoiseModelError(f"T2={t2} exceeds 2*T1={2 * t1}")


def _decay(tg: float, t: float) -> float:
    if tg == 0:
        return 1.0
    return math.exp(-tg / t) if t > 0 else 0.0


def depolarizing_param_1q(eps: float, t1: float = math.inf, t2: float = math.inf, tg: float = 0.0) -> float:
    """Depolarizing probability that tops thermal relaxation up to infidelity ``eps``."""
    _check_relaxation(t1, t2, tg)
    if math.isinf(t1) and math.isinf(t2):
        return _clamp(2 * eps, "1q")
    d = _decay(tg, t1) + 2 * _decay(tg, t2)
    return _clamp(1 + 3 * (2 * eps - 1) / d, "1q")


def depolarizing_param_2q(eps_cx: float, t1: tuple[float, float] = (math.inf, math.inf),
                          t2: tuple[float, float] = (math.inf, math.inf), tg: float = 0.0) -> float:
    for a, b in zip(t1, t2):
        _check_relaxation(a, b, tg)
    if all(math.isinf(x) for x in (*t1, *t2)):
        return _clamp(4 * eps_cx / 3, "2q")
    t01, t11 = _decay(tg, t1[0]), _decay(tg, t1[1])
    t02, t12 = _decay(tg, t2[0]), _decay(tg, t2[1])
    d = (t01 + t11 + t01 * t11 + 4 * t02 * t12 + 2 * (t02 + t12)
         + 2 * (t11 * t02 + t01 * t12))
    return _clamp(1 + 5 * (4 * eps_cx - 3) / d, "2q")


def thermal_mixture_probabilities(t1: float, t2: float, tg: float, p_e: float = 0.0) -> dict[str, float]:
    """Weights of I, Z, reset-to-0 and reset-to-1 for the T2 <= T1 regime."""
    _check_relaxation(t1, t2, tg)
    if t2 > t1:
        raise NoiseModelError("mixture form requires T2 <= T1")
    e1, e2 = _decay(tg, t1), _decay(tg, t2)
    p_reset = 1 - e1
    p_z = (1 - p_reset) * (1 - e2 / e1) / 2 if e1 > 0 else 0.0
    p_r0 = (1 - p_e) * p_reset
    p_r1 = p_e * p_reset
    return {"id": 1 - p_z - p_r0 - p_r1, "z": p_z, "reset0": p_r0, "reset1": p_r1}


def thermal_choi(t1: float, t2: float, tg: float, p_e: float = 0.0) -> np.ndarray:
    e1, e2 = _decay(tg, t1), _decay(tg, t2)
    p_reset = 1 - e1
    return np.array([
        [1 - p_e * p_reset, 0, 0, e2],
        [0, p_e * p_reset, 0, 0],
        [0, 0, (1 - p_e) * p_reset, 0],
        [e2, 0, 0, 1 - (1 - p_e) * p_reset],
    ], dtype=complex)


def thermal_relaxation_channel(t1: float, t2: float, tg: float, p_e: float = 0.0) -> KrausChannel:
    """Amplitude and phase damping over a gate of duration ``tg``.

    For T2 <= T1 the channel is the I/Z/reset mixture (its probabilities are
    kept on ``.mixture``); otherwise it is built from the Choi matrix.
    """
    _check_relaxation(t1, t2, tg)
    if t2 <= t1:
        mix = thermal_mixture_probabilities(t1, t2, tg, p_e)
        ops = [math.sqrt(max(mix["id"], 0.0)) * PAULI["I"], math.sqrt(mix["z"]) * PAULI["Z"]]
        for bit, key in ((0, "reset0"), (1, "reset1")):
            for src in (0, 1):
                k = np.zeros((2, 2), dtype=complex)
                k[bit, src] = math.sqrt(mix[key])
                ops.append(k)
        ops = [k for k in ops if np.any(k)]
        return KrausChannel.from_ops(ops, mixture=mix)
    return choi_to_kraus(thermal_choi(t1, t2, tg, p_e))


# --------------------------------------------------------------------------
# readout
# --------------------------------------------------------------------------

def readout_matrix(eps: float) -> np.ndarray:
    if not 0.0 <= eps <= 0.5:
        raise NoiseModelError(f"readout error {eps!r} outside [0, 0.5]")
    return np.array([[1 - eps, eps], [eps, 1 - eps]])


def apply_readout_error(data, eps: Sequence[float], seed: int | None = None):
    """Symmetric per-bit confusion.

    ``data`` is either a probability vector over ``len(eps)`` bits (first bit
    most significant) or a :class:`Counts`; counts are corrupted shot by shot
    with a PCG64 stream seeded by ``seed``.
    """
    eps = [float(e) for e in eps]
    for e in eps:
        readout_matrix(e)
    k = len(eps)
    if isinstance(data, Counts):
        rng = np.random.Generator(np.random.PCG64(seed))
        out: dict[str, int] = {}
        for key in sorted(data.counts):
            c = data.counts[key]
            bits = np.array([int(b) for b in key])
            flips = rng.random((c, k)) < np.array(eps)
            for row in bits ^ flips:
                s = "".join(map(str, row))
                out[s] = out.get(s, 0) + 1
        return Counts(out, data.shots, data.qubits)
    p = np.asarray(data, dtype=float).reshape((2,) * k)
    for i, e in enumerate(eps):
        p = np.moveaxis(np.tensordot(readout_matrix(e), p, axes=([1], [i])), 0, i)
    return p.reshape(-1)


# --------------------------------------------------------------------------
# assembled model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseConfig:
    order: str = "thermal-first"  # or "depolarizing-first"
    u3_time_factor: float = 2.0  # u3 duration in units of the u2 time
    u3_error_factor: float = 2.0  # u3 infidelity in units of the u2 infidelity
    thermal: bool = True
    depolarizing: bool = True
    readout: bool = True

    def __post_init__(self):
        if self.order not in ("thermal-first", "depolarizing-first"):
            raise NoiseModelError(f"unknown composition order {self.order!r}")


NoiseStep = tuple[KrausChannel, tuple[int, ...]]


@dataclass(frozen=True)
class NoiseModel:
    device: DeviceParams
    config: NoiseConfig
    gate_noise: Mapping[tuple[str, tuple[int, ...]], tuple[NoiseStep, ...]]
    readout_errors: tuple[float, ...]

    def steps_for(self, g: GateOp) -> tuple[NoiseStep, ...]:
        if g.name is Gate.U1 or g.name is Gate.ID:
            return ()
        key = (g.name.value, tuple(g.targets))
        if key not in self.gate_noise:
            if g.name is Gate.CX:
                raise NoiseModelError(f"no cx calibration for pair {tuple(g.targets)}")
            raise NoiseModelError(f"gate {g.name.value} on {g.targets} is not covered by the noise model")
        return self.gate_noise[key]


def _ordered(thermal: list[NoiseStep], depol: list[NoiseStep], cfg: NoiseConfig) -> tuple[NoiseStep, ...]:
    thermal = thermal if cfg.thermal else []
    depol = depol if cfg.depolarizing else []
    return tuple(thermal + depol) if cfg.order == "thermal-first" else tuple(depol + thermal)


def build_noise_model(device: DeviceParams, config: NoiseConfig | None = None) -> NoiseModel:
    cfg = config or NoiseConfig()
    noise: dict[tuple[str, tuple[int, ...]], tuple[NoiseStep, ...]] = {}
    for i, q in enumerate(device.qubits):
        t1, t2 = q.t1_us * 1e3, q.t2_us * 1e3
        p_e = excited_population(q.freq_ghz, q.temperature_k)
        for gate, tg, eps in (
            ("u2", q.gate_time_u2_ns, q.gate_error),
            ("u3", cfg.u3_time_factor * q.gate_time_u2_ns, min(1.0, cfg.u3_error_factor * q.gate_error)),
        ):
            th = [(thermal_relaxation_channel(t1, t2, tg, p_e), (i,))]
            tg_eff = tg if cfg.thermal else 0.0
            p = depolarizing_param_1q(eps, t1, t2, tg_eff)
            dep = [(depolarizing_channel(p, 1), (i,))]
            noise[(gate, (i,))] = _ordered(th, dep, cfg)
    for pair in device.pairs:
        a, b = pair.qubits
        qa, qb = device.qubits[a], device.qubits[b]
        tg = pair.gate_time_cx_ns
        th = [
            (thermal_relaxation_channel(q.t1_us * 1e3, q.t2_us * 1e3, tg,
                                        excited_population(q.freq_ghz, q.temperature_k)), (idx,))
            for idx, q in ((a, qa), (b, qb))
        ]
        tg_eff = tg if cfg.thermal else 0.0
        p2 = depolarizing_param_2q(pair.gate_error_cx, (qa.t1_us * 1e3, qb.t1_us * 1e3),
                                   (qa.t2_us * 1e3, qb.t2_us * 1e3), tg_eff)
        noise[("cx", (a, b))] = _ordered(th, [(depolarizing_channel(p2, 2), (a, b))], cfg)
    readout = tuple(q.readout_error if cfg.readout else 0.0 for q in device.qubits)
    return NoiseModel(device, cfg, noise, readout)


def simulate_noisy(circuit: Circuit, model: NoiseModel, initial: DensityMatrix | None = None) -> DensityMatrix:
    """Density-matrix evolution with each native gate followed by its noise steps."""
    n = circuit.num_qubits
    if n > model.device.num_qubits:
        raise NoiseModelError(f"circuit uses {n} qubits, device has {model.device.num_qubits}")
    rho = DensityMatrix.zero(n) if initial is None else initial
    for g in circuit.ops:
        if g.name is Gate.MEASURE:
            continue
        if g.name is Gate.RESET:
            raise NoiseModelError("reset is not supported by the noisy simulator")
        steps = model.steps_for(g)
        rho = qstate.apply_unitary(rho, base_matrix(g), g.targets, g.controls)
        for channel, targets in steps:
            rho = channel.apply(rho, targets)
    return rho


def noisy_probabilities(circuit: Circuit, model: NoiseModel, measured: Sequence[int] | None = None) -> np.ndarray:
    """Outcome distribution over ``measured`` (first qubit most significant) with readout error."""
    measured = list(circuit.measured_qubits if measured is None else measured)
    rho = simulate_noisy(circuit, model)
    probs = qstate.marginal_probabilities(rho, measured)
    return apply_readout_error(probs, [model.readout_errors[q] for q in measured])
