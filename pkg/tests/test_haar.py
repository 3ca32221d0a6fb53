from __future__ import annotations

import math

import numpy as np
import pytest

from oraclebench import haar, linalg as la
from oraclebench.budget import Budget, SizingError
from oraclebench.seeds import SeedPath

SEED = SeedPath(2024)


def rand_density(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = a @ a.conj().T
    return m / np.trace(m)


def test_haar_unitary_is_unitary_and_deterministic():
    u1 = haar.sample_haar_unitary(4, SEED.child("u", 0))
    u2 = haar.sample_haar_unitary(4, SEED.child("u", 0))
    u3 = haar.sample_haar_unitary(4, SEED.child("u", 1))
    assert np.array_equal(u1.mat, u2.mat)
    assert not np.allclose(u1.mat, u3.mat)


def test_haar_unitary_trace_statistic():
    # the squared absolute trace of a Haar unitary has mean 1
    vals = [
        abs(np.trace(haar.sample_haar_unitary(4, SEED.child("tr", i)).mat)) ** 2
        for i in range(400)
    ]
    assert abs(np.mean(vals) - 1.0) < 0.25


def test_haar_state_mean_is_maximally_mixed():
    d = 4
    acc = np.zeros((d, d), dtype=complex)
    n = 2000
    for i in range(n):
        psi = haar.sample_haar_state(d, SEED.child("st", i)).amplitudes
        acc += np.outer(psi, psi.conj())
    assert np.max(np.abs(acc / n - np.eye(d) / d)) < 0.05


def test_state_moment_exact_small_cases():
    swap = la.permutation_operator((1, 0), 2, 2)
    assert np.allclose(haar.state_moment_exact(2, 2).mat, (np.eye(4) + swap) / 6)
    m = haar.state_moment_exact(2, 3)
    w = np.linalg.eigvalsh(m.mat)
    # projector onto a 4-dim subspace, scaled to unit trace
    assert np.isclose(np.trace(m.mat).real, 1.0)
    assert np.allclose(np.sort(np.unique(np.round(w, 10))), [0.0, 0.25])


def test_state_moment_mc_matches_exact():
    got = haar.state_moment_mc(2, 2, 4000, SEED.child("mc"))
    assert la.trace_distance(got, haar.state_moment_exact(2, 2)) < 0.05


def test_twirl_single_copy_is_depolarizing():
    rng = np.random.default_rng(0)
    rho = rand_density(rng, 3)
    out = haar.twirl_exact(rho, 3, 1)
    assert np.allclose(out.mat, np.eye(3) / 3, atol=1e-10)


def test_twirl_exact_properties():
    rng = np.random.default_rng(1)
    d, ell, r = 2, 2, 2
    rho = rand_density(rng, d**ell * r)
    out = haar.twirl_exact(rho, d, ell)
    # idempotent
    again = haar.twirl_exact(out, d, ell)
    assert la.trace_distance(out, again) < 1e-10
    # invariant under any fixed V^(x ell) on the twirled register
    v = la.random_unitary_from(rng, d)
    vl = la.tensor(np.kron(v, v), np.eye(r))
    assert np.allclose(vl @ out.mat @ vl.conj().T, out.mat, atol=1e-9)


def test_twirl_exact_of_product_zero_state_is_state_moment():
    for d, ell in ((2, 2), (3, 2), (2, 3)):
        e0 = np.zeros(d**ell, dtype=complex)
        e0[0] = 1.0
        got = haar.twirl_exact(np.outer(e0, e0), d, ell)
        assert la.trace_distance(got, haar.state_moment_exact(d, ell)) < 1e-10


def test_twirl_exact_matches_monte_carlo():
    # independent route: direct averaging over sampled unitaries
    rng = np.random.default_rng(2)
    d, ell, r = 2, 2, 2
    rho = rand_density(rng, d**ell * r)
    exact = haar.twirl_exact(rho, d, ell)
    mc = haar.twirl_mc(rho, d, ell, samples=10_000, seed=SEED.child("tw"))
    assert la.trace_distance(exact, mc) < 0.05


def test_twirl_mc_deterministic():
    rng = np.random.default_rng(3)
    rho = rand_density(rng, 4)
    a = haar.twirl_mc(rho, 2, 2, 50, SEED.child("det"))
    b = haar.twirl_mc(rho, 2, 2, 50, SEED.child("det"))
    assert np.array_equal(a.mat, b.mat)


def test_ensemble_twirl_is_plain_average():
    rng = np.random.default_rng(4)
    rho = rand_density(rng, 4)
    us = [la.random_unitary_from(rng, 2) for _ in range(3)]
    got = haar.ensemble_twirl(us, 2, rho)
    want = np.zeros((4, 4), dtype=complex)
    for u in us:
        ul = np.kron(u, u)
        want += ul @ rho @ ul.conj().T
    assert np.allclose(got.mat, want / 3, atol=1e-12)


def test_twirl_spec_dispatch():
    rng = np.random.default_rng(5)
    rho = rand_density(rng, 4)
    exact = haar.TwirlSpec(ell=2, dim=2).apply(rho)
    assert la.trace_distance(exact, haar.twirl_exact(rho, 2, 2)) < 1e-12
    mc = haar.TwirlSpec(ell=2, dim=2, source="haar-mc", samples=100, seed=SEED).apply(rho)
    assert abs(np.trace(mc.mat) - 1) < 1e-9
    with pytest.raises(ValueError):
        haar.TwirlSpec(ell=1, dim=2, source="bogus").apply(rho)


def test_twirl_budget_guard():
    tiny = Budget(max_twirl_dim=8)
    rng = np.random.default_rng(6)
    rho = rand_density(rng, 16)
    with pytest.raises(SizingError):
        haar.twirl_exact(rho, 4, 2, budget=tiny)


def test_haar_choi_smallest_case_and_invariance():
    ref = haar.haar_choi(1, 1)
    assert np.allclose(ref.mat, np.eye(4) / 4, atol=1e-10)

    ref2 = haar.haar_choi(1, 2)
    assert abs(np.trace(ref2.mat) - 1) < 1e-9
    w = la.random_unitary_from(np.random.default_rng(7), 2)
    wl = la.tensor(np.kron(w, w), np.eye(4))
    assert np.allclose(wl @ ref2.mat @ wl.conj().T, ref2.mat, atol=1e-9)


def pair_to_block_order(mat, d_copy, d_partner, ell):
    """Reorder ell copies from (copy, partner) pairs to copies-then-partners."""
    dims = [d_copy, d_partner] * ell
    perm = list(range(0, 2 * ell, 2)) + list(range(1, 2 * ell, 2))
    return la.permute_subsystems(mat, dims, perm)


def test_haar_choi_matches_state_moment_at_one_copy():
    for lam in (1, 2):
        ref = haar.haar_choi(lam, 1)
        mom = haar.state_moment_exact(2 ** (2 * lam), 1)
        assert la.trace_distance(ref, mom) < 1e-10


def test_haar_choi_close_to_state_moment():
    lam, ell = 1, 2
    ref = haar.haar_choi(lam, ell)
    mom = haar.state_moment_exact(2 ** (2 * lam), ell).mat
    # partner register of each copy is the matching block of A'
    mom = pair_to_block_order(mom, 2**lam, 2**lam, ell)
    dist = la.trace_distance(ref.mat, mom)
    rate = ell**2 / 2**lam
    assert dist <= 4 * rate
    assert dist > 1e-6  # genuinely different at this size


def test_haar_isometry_choi_single_copy():
    ref = haar.haar_isometry_choi(1, 1, 1)
    assert np.allclose(ref.mat, np.eye(8) / 8, atol=1e-10)


def test_haar_isometry_choi_close_to_padded_moment():
    lam, s, ell = 1, 1, 2
    ref = haar.haar_isometry_choi(lam, s, ell)
    mom = haar.state_moment_exact(2 ** (2 * lam + s), ell).mat
    mom = pair_to_block_order(mom, 2 ** (lam + s), 2**lam, ell)
    dist = la.trace_distance(ref.mat, mom)
    assert dist <= 4 * ell**2 / 2 ** (lam + s)


def test_permutation_approx_improves_with_register_size():
    rng = np.random.default_rng(8)
    dists = []
    for n in (1, 2):
        dim = 2 ** (2 * n) * 2
        rho = rand_density(rng, dim)
        exact = haar.twirl_exact(rho, 2**n, 2)
        approx = haar.twirl_permutation_approx(rho, n, 2)
        dists.append(la.trace_distance(exact.mat, (approx + approx.conj().T) / 2))
        assert dists[-1] <= 4 * 4 / 2**n
    assert dists[1] < dists[0]


def test_reference_overlap_matrix_matches_dense_sandwich():
    # pair-expansion entries must equal v^dag rho2 v against the materialized
    # reference, across unitary and isometry copy dims
    for case, (lam, s, ell) in enumerate([(1, 0, 2), (1, 1, 2), (2, 0, 2)]):
        d_in, d_out = 2**lam, 2 ** (lam + s)
        embed = np.eye(d_out, d_in)
        ops = []
        for i in range(3):
            op = np.ones((1, 1), dtype=complex)
            for j in range(ell):
                u = haar.sample_haar_unitary(d_out, SEED.child("rom", 10 * case + 3 * i + j))
                op = np.kron(op, u.mat @ embed)
            ops.append(op)
        rho2 = (haar.haar_isometry_choi(lam, s, ell) if s else haar.haar_choi(lam, ell)).mat
        vecs = [la.choi_vector(op) for op in ops]
        dense = np.array([[v.conj() @ rho2 @ w for w in vecs] for v in vecs])
        h = haar.reference_overlap_matrix(ops, d_in, d_out, ell)
        assert np.max(np.abs(dense - h)) <= 1e-12


def test_reference_overlap_identity_values():
    # single copy: 1/(d_in d_out); two identity copies at d=2: second moment
    # of |Tr U|^2 over the group, divided by d^4
    h1 = haar.reference_overlap_matrix([np.eye(4, 2)], 2, 4, 1)
    assert abs(h1[0, 0].real - 1 / 8) <= 1e-14
    h2 = haar.reference_overlap_matrix([np.eye(4)], 2, 2, 2)
    assert abs(h2[0, 0].real - 2 / 16) <= 1e-14
