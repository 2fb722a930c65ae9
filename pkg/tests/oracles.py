"""Independent brute-force references used to derive frozen test values.

Nothing here calls the package's simulation kernels: operators are built
as dense matrices by explicit basis-index arithmetic.
"""
import itertools
import math

import numpy as np


def bit(i, q):
    return (i >> q) & 1


def dense_operator(n, u, targets, controls=()):
    """Full 2^n matrix of ``u`` on ``targets`` (first target = most significant local bit)."""
    dim = 2**n
    k = len(targets)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        if any(bit(col, q) != p for q, p in controls):
            out[col, col] = 1.0
            continue
        local = sum(bit(col, t) << (k - 1 - j) for j, t in enumerate(targets))
        rest = col
        for t in targets:
            rest &= ~(1 << t)
        for new_local in range(2**k):
            row = rest
            for j, t in enumerate(targets):
                if (new_local >> (k - 1 - j)) & 1:
                    row |= 1 << t
            out[row, col] += u[new_local, local]
    return out


H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


def rx(t):
    return np.array([[math.cos(t / 2), -1j * math.sin(t / 2)], [-1j * math.sin(t / 2), math.cos(t / 2)]])


def ry(t):
    return np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]], dtype=complex)


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def zz_expectation_from_probs(probs, n, a, l):
    return float(sum(p * (-1) ** (bit(i, a) ^ bit(i, l)) for i, p in enumerate(probs)))


def toy_closed_form(theta, w2=0.5, n=1):
    s = math.sin(theta / 2 + math.pi / 4) ** 2
    c = math.cos(theta / 2 + math.pi / 4) ** 2
    return (1 - w2) * s**n - w2 * c**n


def kernel_sum(xs, ys, ws, xt, n):
    """sum_m (-1)^y_m w_m |<xt|x_m>|^(2n) with normalization done here."""
    xt = np.asarray(xt, dtype=complex)
    xt = xt / np.linalg.norm(xt)
    total = 0.0
    for x, y, w in zip(xs, ys, ws):
        x = np.asarray(x, dtype=complex)
        x = x / np.linalg.norm(x)
        ov = sum(np.conj(a) * b for a, b in zip(xt, x))
        total += (-1) ** y * w * abs(ov) ** (2 * n)
    return total


def toy_circuit_probs(theta, alpha):
    """Toy five-qubit circuit evaluated with dense matrices (a=0, d=1, in=2, m=3, l=4)."""
    n = 5
    psi = np.zeros(32, dtype=complex)
    psi[0] = 1
    seq = [
        (ry(-alpha), [3], ()),
        (H, [1], ()),
        (rz(-math.pi), [1], ()),
        (np.diag([1, 1j]), [1], ()),
        (Z, [1], ((3, 1),)),
        (X, [4], ((3, 1),)),
        (rx(theta), [2], ()),
        (H, [0], ()),
        (SWAP, [2, 1], ((0, 1),)),
        (H, [0], ()),
    ]
    for u, t, c in seq:
        psi = dense_operator(n, u, t, c) @ psi
    return np.abs(psi) ** 2


def pauli_twirl_fidelity_1q(p):
    """Average fidelity of a 1q depolarizing channel with parameter p."""
    return 1 - p / 2


def all_bitstrings(k):
    return ["".join(b) for b in itertools.product("01", repeat=k)]
