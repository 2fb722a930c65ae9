"""Toy-problem theta sweeps, the amplitude/phase fit and sharpening curves."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import classifier as clf
from .errors import ConfigError, FitError, SwapClfError
from .qstate import sample_from_probabilities

CSV_HEADER = ("theta", "expectation", "c00", "c01", "c10", "c11", "shots")
ZZ_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])  # keys 00, 01, 10, 11 over (a, l)


@dataclass(frozen=True)
class SweepConfig:
    classifier: Literal["hadamard", "swaptest", "forking"] = "swaptest"
    copies: int = 1
    theta_start: float = 0.0
    theta_end: float = 2 * math.pi
    theta_step: float = 0.1
    shots: int = 8192
    seed: int = 0
    w2: float = 0.5
    backend: Literal["exact", "sampled", "noisy"] = "exact"
    device: str | None = None
    noise_order: str = "thermal-first"
    workers: int = 1

    def __post_init__(self):
        if self.theta_step <= 0:
            raise ConfigError("theta step must be positive")
        if self.theta_end < self.theta_start:
            raise ConfigError("theta end precedes theta start")
        if self.backend not in ("exact", "sampled", "noisy"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        clf.ClassifierSpec("swaptest" if self.classifier == "forking" else self.classifier, self.copies)
        if self.backend != "exact" and self.shots <= 0:
            raise ConfigError("shots must be positive for sampled and noisy backends")
        if not 0.0 <= self.w2 <= 1.0:
            raise ConfigError("w2 must lie in [0, 1]")
        if self.backend == "noisy":
            if self.device is None:
                raise ConfigError("the noisy backend needs a device parameter file")
            if self.classifier != "swaptest" or self.copies != 1:
                raise ConfigError("the noisy backend runs the five-qubit swap-test circuit (copies = 1)")

    def thetas(self) -> np.ndarray:
        count = int(math.floor((self.theta_end - self.theta_start) / self.theta_step + 1e-9)) + 1
        return self.theta_start + self.theta_step * np.arange(count)


@dataclass(frozen=True)
class Row:
    theta: float
    expectation: float
    c00: int = 0
    c01: int = 0
    c10: int = 0
    c11: int = 0
    shots: int = 0


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[Row, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.rows])

    @property
    def expectations(self) -> np.ndarray:
        return np.array([r.expectation for r in self.rows])


@dataclass(frozen=True)
class FitResult:
    a: float
    vartheta: float
    w2: float
    residual_norm: float
    nfev: int = 0


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _noise_model(device: str, order: str):
    from .noise import DeviceParams, NoiseConfig, build_noise_model

    return build_noise_model(DeviceParams.load(device), NoiseConfig(order=order))


def _joint_probabilities(cfg: SweepConfig, theta: float) -> np.ndarray:
    if cfg.backend == "noisy":
        from .noise import noisy_probabilities
        from .transpile import CouplingMap, transpile

        model = _noise_model(cfg.device, cfg.noise_order)
        circ = transpile(clf.build_toy_circuit(theta, clf.index_angle(cfg.w2)), CouplingMap.ourense())
        a, l = clf.TOY_REGISTERS["a"][0], clf.TOY_REGISTERS["l"][0]
        return noisy_probabilities(circ, model, [a, l])
    ds, test = clf.toy_dataset(cfg.w2), clf.toy_test_point(theta)
    if cfg.classifier == "hadamard":
        out = clf.run_hadamard(ds, test)
    elif cfg.classifier == "swaptest":
        out = clf.run_swaptest(ds, test, cfg.copies)
    else:
        out = clf.run_forking(ds, test, cfg.copies)
    return out.joint.reshape(-1)


def _sweep_job(args) -> Row:
    cfg, index, theta = args
    probs = _joint_probabilities(cfg, float(theta))
    if cfg.backend == "exact":
        return Row(float(theta), float(probs @ ZZ_SIGNS))
    counts = sample_from_probabilities(probs, 2, cfg.shots, cfg.seed + index, (0, 1))
    c = [counts.counts.get(k, 0) for k in ("00", "01", "10", "11")]
    return Row(float(theta), (c[0] - c[1] - c[2] + c[3]) / cfg.shots, *c, cfg.shots)


def sweep(config: SweepConfig) -> SweepResult:
    """One row per theta; per-job seeds are ``seed + theta index``."""
    jobs = [(config, i, t) for i, t in enumerate(config.thetas())]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    meta = {
        "config": asdict(config),
        "seed": config.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return SweepResult(tuple(rows), meta)


# --------------------------------------------------------------------------
# fit
# --------------------------------------------------------------------------

def fit_model(theta, a: float, vartheta: float, w2: float):
    """a (sin^2((theta + vartheta)/2 + pi/4) - w2)."""
    return a * (np.sin((np.asarray(theta) + vartheta) / 2 + np.pi / 4) ** 2 - w2)


def _normalize(a: float, vt: float, w2: float) -> tuple[float, float, float]:
    # a sin^2(x) - a w2 == (-a) sin^2(x + pi/2) - (-a)(1 - w2)
    if a < 0:
        a, vt, w2 = -a, vt + np.pi, 1 - w2
    vt = math.remainder(vt, 2 * math.pi)
    if vt <= -math.pi:
        vt += 2 * math.pi
    return a, vt, w2


def fit(result: SweepResult | tuple[Sequence[float], Sequence[float]], max_nfev: int = 2000) -> FitResult:
    """Nonlinear least squares of :func:`fit_model` over (a, vartheta, w2)."""
    if isinstance(result, SweepResult):
        x, y = result.thetas, result.expectations
    else:
        x, y = (np.asarray(v, dtype=float) for v in result)
    if len(x) < 4:
        raise FitError("need at least four points to fit three parameters")

    def resid(p):
        return fit_model(x, *p) - y

    best = None
    a0 = float(np.max(y) - np.min(y)) or 1.0
    for vt0 in (0.0, -0.5, 0.5):
        sol = least_squares(resid, [a0, vt0, 0.5], method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=max_nfev)
        if best is None or sol.cost < best.cost:
            best = sol
        if sol.success and sol.cost < 1e-3 * max(1.0, float(np.sum(y**2))):
            break
    a, vt, w2 = _normalize(*best.x)
    out = FitResult(float(a), float(vt), float(w2), float(np.sqrt(2 * best.cost)), int(best.nfev))
    if not best.success:
        raise FitError(f"least squares did not converge: {best.message}", out)
    return out


# --------------------------------------------------------------------------
# sharpening
# --------------------------------------------------------------------------

def sharpening_curves(n_list: Sequence[int], thetas: Sequence[float], w2: float = 0.5) -> dict[int, np.ndarray]:
    """Kernel-oracle expectation of the toy problem for each copy count."""
    if any(n < 1 for n in n_list):
        raise ConfigError("copy counts must be >= 1")
    ds = clf.toy_dataset(w2)
    return {
        int(n): np.array([clf.kernel_oracle(ds, clf.toy_test_point(t), int(n)) for t in thetas])
        for n in n_list
    }


def width_above(thetas: Sequence[float], values: Sequence[float], level: float = 0.25) -> float:
    """Grid estimate of the theta-measure where ``values > level``."""
    thetas = np.asarray(thetas)
    step = float(np.mean(np.diff(thetas))) if len(thetas) > 1 else 0.0
    return float(np.count_nonzero(np.asarray(values) > level) * step)


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in result.rows:
        w.writerow([repr(r.theta), repr(r.expectation), r.c00, r.c01, r.c10, r.c11, r.shots])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    doc = {"rows": [asdict(r) for r in result.rows], "metadata": result.metadata}
    return json.dumps(doc, indent=1)


def emit(result: SweepResult, fmt: Literal["csv", "json"], path: str | Path | None) -> str:
    """Serialize and write to ``path`` (``None`` or ``"-"`` returns the text only)."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if path is not None and str(path) != "-":
        try:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        except OSError as e:
            raise SwapClfError(f"cannot write {path}: {e.strerror}") from None
    return text


def parse(text_or_path: str | Path) -> SweepResult:
    """Read a sweep back from CSV or JSON text, or from a file holding either."""
    text = str(text_or_path)
    if isinstance(text_or_path, Path) or not (text.startswith(CSV_HEADER[0]) or text.lstrip().startswith("{")):
        try:
            text = Path(text_or_path).read_text()
        except OSError as e:
            raise SwapClfError(f"cannot read {text_or_path}: {e.strerror}") from None
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return SweepResult(tuple(Row(**r) for r in doc["rows"]), doc.get("metadata", {}))
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise SwapClfError(f"unexpected CSV header {header}")
    rows = tuple(
        Row(float(t), float(e), int(a), int(b), int(c), int(d), int(s))
        for t, e, a, b, c, d, s in reader
    )
    return SweepResult(rows, {})
