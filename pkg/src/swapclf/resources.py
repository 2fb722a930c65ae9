"""Closed-form qubit and gate counts for the forking construction."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError


def clog2(x: int) -> int:
    """ceil(log2 x), taken as 1 at x = 1 so a lone index still owns a qubit."""
    return max(1, math.ceil(math.log2(x)))


@dataclass(frozen=True)
class ResourceEstimate:
    qubits: int
    toffoli: int
    cnot: int

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


def estimate(n: int, M: int, N: int) -> ResourceEstimate:
    """Qubits, Toffolis and CNOTs for ``n`` copies, ``M`` points of dimension ``N``."""
    if n < 1 or M < 1 or N < 2:
        raise ConfigError(f"need n >= 1, M >= 1, N >= 2 (got n={n}, M={M}, N={N})")
    ln, lm = clog2(N), clog2(M)
    return ResourceEstimate(
        qubits=n * (M + 2) * ln + 2 * lm + M + 1,
        toffoli=n * (M + 1) * ln + M * (2 * lm - 1),
        cnot=2 * (n * (M + 1) * ln + M),
    )
