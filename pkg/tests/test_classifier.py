import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from swapclf import classifier as clf
from swapclf.circuit import Gate, simulate
from swapclf.errors import CapacityError, SwapClfError
from swapclf.qstate import marginal_probabilities
from swapclf.resources import estimate


def random_instance(rng, M, N):
    xs = [rng.normal(size=N) + 1j * rng.normal(size=N) for _ in range(M)]
    ys = [int(y) for y in rng.integers(0, 2, M)]
    w = rng.random(M)
    w /= w.sum()
    return clf.Dataset.from_arrays(xs, ys, w), clf.TestPoint(rng.normal(size=N) + 1j * rng.normal(size=N))


def test_encode_amplitude():
    s = clf.encode_amplitude([1j / math.sqrt(2), 1 / math.sqrt(2)])
    assert s.num_qubits == 1
    np.testing.assert_allclose(s.amplitudes, [1j / math.sqrt(2), 1 / math.sqrt(2)])
    s = clf.encode_amplitude([1, 0, 0])
    assert s.num_qubits == 2
    np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0])
    np.testing.assert_allclose(clf.encode_amplitude([3, 4]).amplitudes, [0.6, 0.8])
    with pytest.raises(SwapClfError):
        clf.encode_amplitude([0, 0])


def test_dataset_invariants():
    with pytest.raises(SwapClfError):
        clf.Dataset.from_arrays([[1, 0]], [2])
    with pytest.raises(SwapClfError):
        clf.Dataset.from_arrays([[1, 0], [0, 1]], [0, 1], [0.5, 0.6])
    with pytest.raises(SwapClfError):
        clf.ClassifierSpec("hadamard", 2)


def test_hadamard_state_amplitudes():
    ds, test = clf.toy_dataset(), clf.toy_test_point(0.4)
    psi = clf.prepare_hadamard_state(ds, test)
    assert psi.num_qubits == 4  # a, d, l, m
    # |a=0, d, l=0, m=0> carries x_1 / 2
    for d in (0, 1):
        assert psi.amplitudes[d << 1] == pytest.approx(0.5 * clf.TOY_X1[d])
    single = clf.Dataset.from_arrays([[1, 0]], [1])
    psi = clf.prepare_hadamard_state(single, clf.TestPoint(np.array([0, 1])))
    nz = {i: a for i, a in enumerate(psi.amplitudes) if abs(a) > 1e-15}
    # (|0>|x_1> + |1>|x~>)|y=1>/sqrt2 with m=0
    assert set(nz) == {0b0100, 0b0111}


def test_swaptest_state_widths():
    ds, test = clf.toy_dataset(), clf.toy_test_point(0.4)
    assert clf.prepare_swaptest_state(ds, test, 1).num_qubits == 5
    assert clf.prepare_swaptest_state(ds, test, 2).num_qubits == 7
    with pytest.raises(CapacityError):
        clf.prepare_swaptest_state(ds, test, 2, max_qubits=6)


@pytest.mark.parametrize("theta", [0.0, 0.7, math.pi / 2, 2.5, 4.0])
def test_toy_values(theta):
    ds, test = clf.toy_dataset(), clf.toy_test_point(theta)
    want = oracles.toy_closed_form(theta)
    assert clf.run_swaptest(ds, test).expectation == pytest.approx(want, abs=1e-12)
    assert clf.run_hadamard(ds, test).expectation == pytest.approx(0.0, abs=1e-12)
    assert clf.kernel_oracle(ds, test) == pytest.approx(want, abs=1e-12)
    assert clf.helstrom_expectation(ds, test) == pytest.approx(want, abs=1e-12)


def test_n10_value():
    # oracle: 1/2 (sin^2 5pi/8)^10 - 1/2 (cos^2 5pi/8)^10
    ds, test = clf.toy_dataset(), clf.toy_test_point(3 * math.pi / 4)
    assert clf.run_swaptest(ds, test, 10).expectation == pytest.approx(0.10263061069711972, abs=1e-10)


def test_toy_tie_at_zero():
    out = clf.run_swaptest(clf.toy_dataset(), clf.toy_test_point(0.0))
    assert out.label == "tie"


def test_assign_label():
    assert clf.assign_label(0.3) == 0
    assert clf.assign_label(-0.3) == 1
    assert clf.assign_label(0.0) == "tie"
    assert clf.assign_label(0.01, tie_epsilon=0.02) == "tie"


def test_perfect_overlap_trivia():
    one = clf.Dataset.from_arrays([[0.6, 0.8j]], [0])
    assert clf.run_hadamard(one, clf.TestPoint(np.array([0.6, 0.8j]))).expectation == pytest.approx(1.0)
    neg = clf.Dataset.from_arrays([[0.6, 0.8j]], [1])
    assert clf.kernel_oracle(neg, clf.TestPoint(np.array([0.6, 0.8j]))) == pytest.approx(-1.0)
    assert clf.helstrom_expectation(neg, clf.TestPoint(np.array([0.6, 0.8j]))) == pytest.approx(-1.0)
    orth = clf.Dataset.from_arrays([[1, 0], [1, 0]], [0, 1], [0.3, 0.7])
    assert clf.kernel_oracle(orth, clf.TestPoint(np.array([0, 1]))) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_hadamard_matches_real_overlap(seed):
    rng = np.random.default_rng(seed)
    ds, test = random_instance(rng, int(rng.choice([1, 2, 3, 4])), int(rng.choice([2, 4])))
    out = clf.run_hadamard(ds, test)
    assert out.expectation == pytest.approx(clf.kernel_oracle(ds, test, variant="real-overlap"), abs=1e-10)
    assert out.p0 + out.p1 == pytest.approx(1.0, abs=1e-10)
    want_p0 = sum(w * (1 + np.vdot(x, test.x).real) / 2 for x, w in zip(ds.points, ds.weights))
    assert out.p0 == pytest.approx(want_p0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2, 3]))
def test_swaptest_matches_independent_kernel(seed, n):
    rng = np.random.default_rng(seed)
    M, N = int(rng.choice([1, 2, 4])), int(rng.choice([2, 4]))
    ds, test = random_instance(rng, M, N)
    out = clf.run_swaptest(ds, test, n)
    want = oracles.kernel_sum(ds.points, ds.labels, ds.weights, test.x, n)
    assert out.expectation == pytest.approx(want, abs=1e-10)
    assert out.p0 >= 0.5 - 1e-10
    assert out.p0 + out.p1 == pytest.approx(1.0, abs=1e-10)
    for a in (0, 1):
        if out.p0 > 1e-9 and out.p1 > 1e-9:
            assert out.conditional[(0, a)] + out.conditional[(1, a)] == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2, 3]))
def test_helstrom_identity(seed, n):
    rng = np.random.default_rng(seed)
    ds, test = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(2, 5)))
    assert clf.helstrom_expectation(ds, test, n) == pytest.approx(clf.kernel_oracle(ds, test, n), abs=1e-12)


def test_helstrom_single_class():
    ds = clf.Dataset.from_arrays([[1, 0], [0.6, 0.8]], [0, 0], [0.5, 0.5])
    A, p0, rho0, p1, rho1 = clf.helstrom_operator(ds)
    assert p0 == pytest.approx(1.0) and p1 == 0.0 and rho1 is None
    assert np.trace(rho0) == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_weight_shift_is_affine(seed):
    rng = np.random.default_rng(seed)
    xs = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2)]
    test = clf.TestPoint(rng.normal(size=2) + 1j * rng.normal(size=2))
    n = int(rng.integers(1, 4))
    k1 = abs(np.vdot(test.x, clf.encode_amplitude(xs[0]).amplitudes)) ** (2 * n)
    k2 = abs(np.vdot(test.x, clf.encode_amplitude(xs[1]).amplitudes)) ** (2 * n)
    for w2 in (0.0, 0.25, 0.8):
        ds = clf.Dataset.from_arrays(xs, [0, 1], [1 - w2, w2])
        assert clf.kernel_oracle(ds, test, n) == pytest.approx(k1 - w2 * (k1 + k2), abs=1e-12)


def test_forking_toy_is_nine_qubits():
    ds, test = clf.toy_dataset(), clf.toy_test_point(1.0)
    circ = clf.build_forking_circuit(ds, test)
    assert circ.num_qubits == 9 == estimate(1, 2, 2).qubits
    assert set(circ.registers) == {"a", "in", "d", "l", "m", "anc", "x_1", "l_1", "x_2", "l_2"}
    out = clf.run_forking(ds, test)
    assert out.expectation == pytest.approx(clf.run_swaptest(ds, test).expectation, abs=1e-10)
    # brute force: full statevector of the 9-qubit circuit
    psi = simulate(circ)
    p = marginal_probabilities(psi, [circ.q("a"), circ.q("l")])
    assert p @ [1, -1, -1, 1] == pytest.approx(out.expectation, abs=1e-10)


def test_forking_junk_irrelevant():
    ds, test = clf.toy_dataset(0.3), clf.toy_test_point(2.0)
    circ = clf.build_forking_circuit(ds, test)
    psi = simulate(circ)
    direct = simulate(clf.build_toy_circuit(2.0, clf.index_angle(0.3)))
    got = marginal_probabilities(psi, [circ.q("a"), circ.q("l")])
    want = marginal_probabilities(direct, [0, 4])
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_forking_single_point(n, rng):
    ds, test = random_instance(rng, 1, 2)
    want = (-1) ** ds.labels[0] * abs(np.vdot(test.x, ds.points[0])) ** (2 * n)
    assert clf.run_forking(ds, test, n).expectation == pytest.approx(want, abs=1e-10)


def test_forking_m4_decomposed_counts(rng):
    ds, test = random_instance(rng, 4, 2)
    hi = clf.build_forking_circuit(ds, test, decompose=False)
    lo = clf.build_forking_circuit(ds, test, decompose=True)
    assert clf.run_forking(ds, test).expectation == pytest.approx(clf.kernel_oracle(ds, test), abs=1e-10)
    assert clf.run_forking(ds, test, decompose=True).expectation == pytest.approx(
        clf.kernel_oracle(ds, test), abs=1e-10)
    body = lo.ops[lo.metadata["loading_end"]:]
    tof = sum(g.name is Gate.CCX for g in body)
    cx = sum(g.name is Gate.CX for g in body)
    est = estimate(1, 4, 2)
    assert (tof, cx) == (est.toffoli, est.cnot)
    assert hi.num_qubits == lo.num_qubits == est.qubits


def test_forking_budget_error(rng):
    ds, test = random_instance(rng, 4, 4)
    with pytest.raises(CapacityError) as e:
        clf.build_forking_circuit(ds, test, 2, max_qubits=20)
    assert e.value.required == estimate(2, 4, 4).qubits


def test_toy_circuit_branches():
    # with alpha = pi the index is |1> and d must hold x_2
    from swapclf.circuit import Circuit
    from swapclf.qstate import partial_trace

    c = clf.build_toy_circuit(0.0, math.pi, measure=False)
    prep = Circuit(5, c.ops[:5])
    rho = partial_trace(simulate(prep), [1])
    np.testing.assert_allclose(rho.matrix, np.outer(clf.TOY_X2, clf.TOY_X2.conj()), atol=1e-12)
    assert clf.run_toy(1.0, w2=0.0).expectation == pytest.approx(
        abs(np.vdot(clf.toy_test_point(1.0).x, clf.TOY_X1)) ** 2, abs=1e-12)


def test_problem_json_round_trip(rng):
    ds, test = random_instance(rng, 3, 3)
    ds2, test2 = clf.load_problem(clf.dump_problem(ds, test))
    for a, b in zip(ds.points, ds2.points):
        np.testing.assert_allclose(a, b, atol=1e-15)
    assert ds2.labels == ds.labels
    np.testing.assert_allclose(test2.x, test.x, atol=1e-15)


def test_standardize():
    rng = np.random.default_rng(0)
    x = rng.normal(3, 2, size=(50, 4))
    z, t = clf.standardize(x, x[:2])
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(t, z[:2])
