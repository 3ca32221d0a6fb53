from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oraclebench.budget import SizingError
from oraclebench import linalg as la

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def rng_of(seed):
    return np.random.default_rng(seed)


def rand_herm(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def rand_density(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = a @ a.conj().T
    return m / np.trace(m)


# ---------------------------------------------------------------- wrappers


def test_pure_state_validation():
    la.PureState(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        la.PureState(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        la.PureState(np.array([np.nan, 0.0]))


def test_pure_state_qubits_property():
    assert la.PureState(np.ones(8) / math.sqrt(8)).qubits == 3
    s = la.PureState(np.ones(3) / math.sqrt(3))
    assert s.dim == 3
    with pytest.raises(ValueError):
        _ = s.qubits


def test_unitary_validation():
    la.UnitaryMatrix(X)
    with pytest.raises(ValueError):
        la.UnitaryMatrix(np.array([[1, 0], [0, 2]], dtype=complex))
    u = la.UnitaryMatrix(la.random_unitary_from(rng_of(0), 4))
    assert np.allclose(u.dagger().mat @ u.mat, np.eye(4), atol=1e-9)


def test_density_validation_and_clipping():
    with pytest.raises(ValueError):
        la.DensityMatrix(np.array([[1.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        la.DensityMatrix(np.eye(2))
    # tiny negative eigenvalue is clipped, a large one is rejected
    m = np.diag([1.0 + 5e-10, -5e-10]).astype(complex)
    dm = la.DensityMatrix(m)
    assert np.linalg.eigvalsh(dm.mat)[0] >= 0.0
    with pytest.raises(ValueError):
        la.DensityMatrix(np.diag([1.1, -0.1]).astype(complex))


def test_channel_rep_kraus_completeness_and_apply():
    rng = rng_of(2)
    w = la.UnitaryMatrix(la.random_unitary_from(rng, 8))
    chan = la.ChannelRep(w, ancilla_in_qubits=1, traced_out_qubits=1)
    ks = chan.kraus()
    assert len(ks) == 2 and ks[0].shape == (4, 4)
    acc = sum(k.conj().T @ k for k in ks)
    assert np.allclose(acc, np.eye(4), atol=1e-10)

    rho = rand_density(rng, 4)
    out = chan.apply(rho)
    # independent route: conjugate the embedded state by the full unitary, then trace
    emb = np.zeros((8, 8), dtype=complex)
    emb[::2, ::2] = rho  # ancilla |0> appended as least significant qubit
    direct = w.mat @ emb @ w.mat.conj().T
    direct = la.partial_trace(direct, [4, 2], keep=[0])
    assert np.allclose(out.mat, direct, atol=1e-10)


# ---------------------------------------------------------------- tensor / traces


def test_tensor_and_trace_multiplicativity():
    assert np.allclose(la.tensor(I2, I2), np.eye(4))
    v = la.apply_on_wires(
        np.array([1, 0, 0, 0], dtype=complex), X, [0], 2
    )
    assert np.allclose(v, [0, 0, 1, 0])  # X on the most significant qubit
    rng = rng_of(3)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.isclose(np.trace(la.tensor(a, b)), np.trace(a) * np.trace(b))


def test_partial_trace_of_product_state():
    rng = rng_of(4)
    ra, rb = rand_density(rng, 3), rand_density(rng, 4)
    joint = la.tensor(ra, rb)
    assert np.allclose(la.partial_trace(joint, [3, 4], keep=[0]), ra, atol=1e-12)
    assert np.allclose(la.partial_trace(joint, [3, 4], keep=[1]), rb, atol=1e-12)


def test_partial_trace_of_entangled_pair_is_maximally_mixed():
    for d in (2, 3, 4):
        omega = la.max_entangled(d).density()
        red = la.partial_trace(omega, [d, d], keep=[0])
        assert np.allclose(red, np.eye(d) / d, atol=1e-12)


def test_partial_trace_matches_kraus_sum():
    # independent route: explicit Kraus slices of the same unitary
    rng = rng_of(5)
    w = la.random_unitary_from(rng, 8)
    psi = la.random_state_from(rng, 8)
    rho = np.outer(psi, psi.conj())
    lib = la.partial_trace(rho, [4, 2], keep=[0])
    by_kraus = np.zeros((4, 4), dtype=complex)
    for j in range(2):
        v = psi.reshape(4, 2)[:, j]
        by_kraus += np.outer(v, v.conj())
    assert np.allclose(lib, by_kraus, atol=1e-12)


def test_permute_subsystems_and_matrix_agree():
    rng = rng_of(6)
    dims = [2, 3, 2]
    m = rand_density(rng, 12)
    perm = [2, 0, 1]
    p = la.subsystem_perm_matrix(dims, perm)
    assert np.allclose(p.conj().T @ p, np.eye(12), atol=1e-12)
    assert np.allclose(
        la.permute_subsystems(m, dims, perm), p @ m @ p.conj().T, atol=1e-12
    )


def test_permute_subsystems_swaps_product_factors():
    rng = rng_of(7)
    a, b = rand_density(rng, 2), rand_density(rng, 3)
    swapped = la.permute_subsystems(la.tensor(a, b), [2, 3], [1, 0])
    assert np.allclose(swapped, la.tensor(b, a), atol=1e-12)


def test_apply_on_wires_against_dense():
    rng = rng_of(8)
    vec = la.random_state_from(rng, 8)
    u = la.random_unitary_from(rng, 2)
    out = la.apply_on_wires(vec, u, [1], 3)
    dense = la.tensor(I2, u, I2)
    assert np.allclose(out, dense @ vec, atol=1e-12)

    g = la.random_unitary_from(rng, 4)
    out2 = la.apply_on_wires(vec, g, [2, 0], 3)
    p = la.subsystem_perm_matrix([2, 2, 2], [2, 0, 1])
    dense2 = p.conj().T @ la.tensor(g, I2) @ p
    assert np.allclose(out2, dense2 @ vec, atol=1e-12)


# ---------------------------------------------------------------- norms


def test_schatten_trivial_values():
    assert np.isclose(la.schatten_norm(np.eye(4), 1), 4.0)
    assert np.isclose(la.schatten_norm(np.eye(4), 2), 2.0)
    assert np.isclose(la.schatten_norm(np.eye(4), np.inf), 1.0)


@given(seed=st.integers(0, 10_000), d=st.sampled_from([2, 3, 5]))
@settings(deadline=None, max_examples=40)
def test_schatten_ordering(seed, d):
    a = rng_of(seed).standard_normal((d, d)) + 1j * rng_of(seed + 1).standard_normal((d, d))
    n1, n2, ninf = (la.schatten_norm(a, p) for p in (1, 2, np.inf))
    assert n1 + 1e-12 >= n2 >= ninf - 1e-12


def test_trace_product_bound():
    rng = rng_of(9)
    for _ in range(50):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        inner = abs(np.trace(a.conj().T @ b))
        assert inner <= la.schatten_norm(a, 1) * la.schatten_norm(b, np.inf) + 1e-9
        assert inner <= la.schatten_norm(a, 2) * la.schatten_norm(b, 2) + 1e-9


def test_trace_distance_pure_state_formula():
    zero = la.PureState(np.array([1, 0], dtype=complex))
    plus = la.PureState(np.array([1, 1], dtype=complex) / math.sqrt(2))
    got = la.trace_distance(zero, plus)
    assert np.isclose(got, math.sqrt(1 - 0.5), atol=1e-12)
    rng = rng_of(10)
    for d in (2, 5):
        u, v = la.random_state_from(rng, d), la.random_state_from(rng, d)
        ov2 = abs(np.vdot(u, v)) ** 2
        got = la.trace_distance(np.outer(u, u.conj()), np.outer(v, v.conj()))
        assert np.isclose(got, math.sqrt(1 - ov2), atol=1e-10)


def test_trace_distance_equals_best_projector_gap():
    rng = rng_of(11)
    for _ in range(10):
        r, s = rand_density(rng, 4), rand_density(rng, 4)
        td = la.trace_distance(r, s)
        w, v = np.linalg.eigh(r - s)
        pos = v[:, w > 0]
        best = pos @ pos.conj().T
        achieved = np.real(np.trace(best @ (r - s)))
        assert np.isclose(achieved, td, atol=1e-10)
        for _ in range(20):
            u = la.random_unitary_from(rng, 4)[:, :2]
            p = u @ u.conj().T
            assert np.real(np.trace(p @ (r - s))) <= td + 1e-10


# ---------------------------------------------------------------- entangled pairs


def test_max_entangled_amplitudes_and_marginals():
    assert np.allclose(
        la.max_entangled(2).amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2)
    )
    for d in (2, 3):
        rho = la.max_entangled(d).density()
        for side in (0, 1):
            assert np.allclose(
                la.partial_trace(rho, [d, d], keep=[side]), np.eye(d) / d, atol=1e-12
            )


def test_choi_vector_identity():
    rng = rng_of(12)
    for d_out, d_in in ((4, 4), (8, 4), (2, 8)):
        a = rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))
        direct = la.tensor(a, np.eye(d_in)) @ la.omega_vector(d_in)
        assert np.allclose(la.choi_vector(a), direct, atol=1e-12)
        assert np.isclose(
            np.linalg.norm(la.choi_vector(a)) ** 2,
            np.real(np.trace(a.conj().T @ a)) / d_in,
        )


# ---------------------------------------------------------------- permutations


def test_permutation_operator_basics():
    assert np.allclose(la.permutation_operator((0, 1), 2, 2), np.eye(4))
    swap = la.permutation_operator((1, 0), 2, 2)
    expected = np.zeros((4, 4))
    expected[[0, 2, 1, 3], [0, 1, 2, 3]] = 1  # |ab> -> |ba>
    assert np.allclose(swap, expected)


def test_permutation_operator_is_homomorphism():
    d, ell = 2, 3
    for p in la.all_perms(ell):
        for q in la.all_perms(ell):
            lhs = la.permutation_operator(p, d, ell) @ la.permutation_operator(q, d, ell)
            rhs = la.permutation_operator(la.perm_compose(p, q), d, ell)
            assert np.allclose(lhs, rhs)


@given(perm=st.permutations(list(range(3))), d=st.sampled_from([2, 3]))
@settings(deadline=None, max_examples=30)
def test_permutation_operator_unitary_and_inverse(perm, d):
    r = la.permutation_operator(tuple(perm), d, 3)
    assert np.allclose(r @ r.conj().T, np.eye(d**3))
    assert np.allclose(r.conj().T, la.permutation_operator(la.perm_inverse(tuple(perm)), d, 3))


def test_perm_cycles():
    assert la.perm_cycles((0, 1, 2)) == 3
    assert la.perm_cycles((1, 0, 2)) == 2
    assert la.perm_cycles((1, 2, 0)) == 1


def test_permutation_operator_size_guard():
    with pytest.raises(SizingError):
        la.permutation_operator(tuple(range(2)), 2**7, 2)


def test_sym_projector_values():
    swap = la.permutation_operator((1, 0), 2, 2)
    assert np.allclose(la.sym_projector(2, 2), (np.eye(4) + swap) / 2)
    # trace counts the symmetric-subspace dimension
    for d, ell, want in ((2, 2, 3), (2, 3, 4), (3, 2, 6), (4, 1, 4)):
        p = la.sym_projector(d, ell)
        assert np.isclose(np.trace(p).real, want)
        assert np.allclose(p @ p, p, atol=1e-10)
        for pi in la.all_perms(ell):
            r = la.permutation_operator(pi, d, ell)
            assert np.allclose(r @ p, p @ r, atol=1e-10)


# ---------------------------------------------------------------- diamond distance


def test_diamond_distance_unitary_trivial_cases():
    rng = rng_of(13)
    u = la.UnitaryMatrix(la.random_unitary_from(rng, 4))
    v = la.UnitaryMatrix(np.exp(0.7j) * u.mat)
    assert la.diamond_distance_unitary(u, u) == 0.0
    assert la.diamond_distance_unitary(u, v) < 1e-7
    eye = la.UnitaryMatrix(np.eye(2))
    assert np.isclose(la.diamond_distance_unitary(eye, la.UnitaryMatrix(Z)), 2.0)


def test_diamond_distance_lower_bound_consistency():
    rng = rng_of(14)
    eye = la.UnitaryMatrix(np.eye(2))
    z = la.UnitaryMatrix(Z)
    lb = la.diamond_distance_lb(eye, z, trials=800, seed=1)
    assert lb <= 2.0 + 1e-9
    assert lb > 1.9  # sampled maximization should come close for orthogonal spectra
    for trial in range(3):
        a = la.UnitaryMatrix(la.random_unitary_from(rng, 4))
        b = la.UnitaryMatrix(la.random_unitary_from(rng, 4))
        exact = la.diamond_distance_unitary(a, b)
        lb = la.diamond_distance_lb(a, b, trials=300, seed=trial)
        assert lb <= exact + 1e-9
        more = la.diamond_distance_lb(a, b, trials=600, seed=trial)
        assert more + 1e-12 >= lb  # nondecreasing in trials with a shared stream


# ---------------------------------------------------------------- support / gentle


def test_support_projector_ranks():
    rng = rng_of(15)
    psi = la.random_state_from(rng, 6)
    p, rank = la.support_projector(np.outer(psi, psi.conj()))
    assert rank == 1
    assert np.allclose(p @ psi, psi, atol=1e-10)

    a, b = la.random_state_from(rng, 6), la.random_state_from(rng, 6)
    mix = 0.5 * np.outer(a, a.conj()) + 0.5 * np.outer(b, b.conj())
    _, rank2 = la.support_projector(mix)
    assert rank2 == 2

    _, rank_full = la.support_projector(np.eye(5) / 5)
    assert rank_full == 5


def test_gentle_residual_identity_and_bound():
    rng = rng_of(16)
    rho = rand_density(rng, 4)
    res, dist = la.gentle_residual(np.eye(4), rho)
    assert dist < 1e-10
    assert np.allclose(res.mat, rho, atol=1e-10)

    # near-certain projective outcome disturbs at most sqrt(eps)
    for seed in range(20):
        r2 = np.random.default_rng(seed)
        psi = la.random_state_from(r2, 8)
        u = la.random_unitary_from(r2, 8)
        p = u[:, :6] @ u[:, :6].conj().T
        prob = float(np.real(psi.conj() @ p @ psi))
        if prob < 0.5:
            continue
        eps = 1 - prob
        _, dist = la.gentle_residual(p, np.outer(psi, psi.conj()))
        assert dist <= math.sqrt(eps) + 1e-9


def test_zero_probability_outcome_faults():
    psi = np.zeros(4)
    psi_state = np.zeros(4, dtype=complex)
    psi_state[0] = 1.0
    p = np.diag([0.0, 1.0, 1.0, 1.0]).astype(complex)
    with pytest.raises(ValueError):
        la.gentle_residual(p, np.outer(psi_state, psi_state.conj()))


# ---------------------------------------------------------------- conjugation stability


def test_conjugation_difference_bounded_by_unitary_distance():
    rng = rng_of(17)
    for _ in range(100):
        d = int(rng.integers(2, 9))
        u = la.random_unitary_from(rng, d)
        psi = la.random_state_from(rng, d)
        # mix of near and far partners
        if rng.random() < 0.5:
            h = rand_herm(rng, d)
            h = h / np.linalg.norm(h, 2)
            from scipy.linalg import expm

            v = expm(1j * 0.05 * h) @ u
        else:
            v = la.random_unitary_from(rng, d)
        rho_u = np.outer(u @ psi, (u @ psi).conj())
        rho_v = np.outer(v @ psi, (v @ psi).conj())
        lhs = la.schatten_norm(rho_u - rho_v, 2)
        assert lhs <= 2 * la.schatten_norm(u - v, 2) + 1e-9


# ---------------------------------------------------------------- ricochet move


def test_transpose_identity_exact_for_random_isometries():
    rng = rng_of(31)
    for _ in range(50):
        n_in = int(rng.integers(1, 4))
        n_out = int(rng.integers(n_in, 6))
        u = la.random_unitary_from(rng, 2**n_out)
        iso = u[:, : 2**n_in]
        assert la.transpose_identity_residual(iso) <= 1e-10


def test_transpose_identity_square_and_rectangular_shapes():
    assert la.transpose_identity_residual(np.eye(4)) <= 1e-12
    assert la.transpose_identity_residual(np.eye(8, 2)) <= 1e-12
