from __future__ import annotations

import numpy as np
import pytest

from oraclebench import subroutines, tomography as tg
from oraclebench.haar import sample_haar_unitary
from oraclebench.linalg import UnitaryMatrix
from oraclebench.seeds import SeedPath

SEED = SeedPath(41255)


def test_exact_tomography_recovers_up_to_phase():
    for i in range(10):
        u = sample_haar_unitary(8, SEED.child("ex", i))
        res = tg.process_tomography_exact(lambda v: u.mat @ v, 8)
        assert tg.phase_aligned_distance(res.estimate, u.mat) < 1e-9
        assert res.mode == "exact" and res.queries == 8
        assert res.gram_defect < 1e-10


def test_exact_tomography_canonical_phase_kills_global_phase():
    u = sample_haar_unitary(4, SEED.child("ph"))
    r1 = tg.process_tomography_exact(lambda v: u.mat @ v, 4)
    r2 = tg.process_tomography_exact(lambda v: 1j * (u.mat @ v), 4)
    assert np.allclose(r1.estimate, r2.estimate, atol=1e-9)


def test_exact_tomography_faults_on_nonisometry():
    m = np.diag([1.0, 0.5])
    with pytest.raises(ValueError, match="gram defect"):
        tg.process_tomography_exact(lambda v: m @ v, 2)


def test_exact_tomography_handles_isometry():
    u = sample_haar_unitary(8, SEED.child("iso"))
    v_iso = u.mat[:, :4]  # 8x4 isometry
    res = tg.process_tomography_exact(lambda v: v_iso @ v, 4)
    assert res.estimate.shape == (8, 4)
    assert tg.phase_aligned_distance(res.estimate, v_iso) < 1e-9


def test_nearest_unitary_projects():
    rng = SEED.child("nu").rng()
    u = sample_haar_unitary(4, SEED.child("nu-u")).mat
    noisy = u + 0.01 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    proj = tg.nearest_unitary(noisy)
    UnitaryMatrix(proj)  # construction checks unitarity
    assert np.linalg.norm(proj - u, 2) < 0.1


def test_canonical_phase_is_idempotent_and_deterministic():
    rng = SEED.child("cph").rng()
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c1 = tg.canonical_phase(m)
    c2 = tg.canonical_phase(np.exp(0.7j) * m)
    assert np.allclose(c1, c2, atol=1e-12)
    assert np.allclose(tg.canonical_phase(c1), c1, atol=1e-12)
    idx = np.argmax(np.abs(c1).ravel())
    top = c1.ravel()[idx]
    assert abs(top.imag) < 1e-12 and top.real > 0


def test_shot_count_scales():
    assert tg.shot_count(2, 0.1, 0.1) < tg.shot_count(2, 0.05, 0.1)
    assert tg.shot_count(2, 0.1, 0.1) < tg.shot_count(4, 0.1, 0.1)
    with pytest.raises(ValueError):
        tg.shot_count(2, 0.0, 0.1)


def test_sampled_tomography_hits_target_error():
    hits = 0
    for i in range(20):
        u = sample_haar_unitary(2, SEED.child("sm", i))
        res = tg.process_tomography_sampled(
            lambda v: u.mat @ v, 2, 0.1, 0.1, SEED.child("sm-sh", i)
        )
        err = tg.phase_aligned_distance(res.estimate, u.mat)
        hits += err <= 0.1
        assert res.mode == "sampled"
        assert res.queries == 4 * 3 * res.shots_per_setting
    assert hits >= 18


def test_sampled_tomography_is_seeded():
    u = sample_haar_unitary(2, SEED.child("det"))
    r1 = tg.process_tomography_sampled(lambda v: u.mat @ v, 2, 0.2, 0.2, SEED.child("d", 3))
    r2 = tg.process_tomography_sampled(lambda v: u.mat @ v, 2, 0.2, 0.2, SEED.child("d", 3))
    assert np.array_equal(r1.estimate, r2.estimate)


def test_sampled_tomography_dim4():
    u = sample_haar_unitary(4, SEED.child("d4"))
    res = tg.process_tomography_sampled(
        lambda v: u.mat @ v, 4, 0.15, 0.2, SEED.child("d4-s")
    )
    assert tg.phase_aligned_distance(res.estimate, u.mat) <= 0.15


def test_tomography_routes_spectral_work_through_subroutines():
    u = sample_haar_unitary(2, SEED.child("log"))
    with subroutines.capture() as log:
        tg.process_tomography_sampled(lambda v: u.mat @ v, 2, 0.3, 0.3, SEED.child("lg"))
    ops = {(e["op"], e["label"]) for e in log}
    assert ("eigh", "tomo-correlation") in ops
    assert ("svd", "polar") in ops
