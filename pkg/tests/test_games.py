from __future__ import annotations

import numpy as np

from oraclebench import games
from oraclebench.oracles import SwapOracleFamily
from oraclebench.seeds import SeedPath

SEED = SeedPath(88111)


def test_prfsg_game_shapes_and_range():
    res = games.prfsg_game(2, 20, SEED.child("g"))
    assert res.advantages.shape == (20,)
    assert res.t_queries == 2 and res.lam == 2
    assert np.all(res.advantages > -0.2) and np.all(res.advantages <= 1.0)
    assert res.mean_bound == 1.0  # 2^2 / 2^2, loose at this size


def test_prfsg_game_is_deterministic():
    r1 = games.prfsg_game(2, 5, SEED.child("det"))
    r2 = games.prfsg_game(2, 5, SEED.child("det"))
    assert np.array_equal(r1.advantages, r2.advantages)


def test_prfsg_advantage_matches_independent_projector_route():
    res = games.prfsg_game(2, 1, SEED.child("ind"))
    fam = SwapOracleFamily(SEED.child("ind").child("draw", 0))
    states = [fam.state(4, (k << 2) | 0).amplitudes for k in range(4)]
    b = np.stack(states[:2], axis=1)
    proj = b @ np.linalg.pinv(b.conj().T @ b) @ b.conj().T
    accept = [float(np.real(s.conj() @ proj @ s)) for s in states]
    want = np.mean(accept) - 2 / 16
    assert abs(res.advantages[0] - want) < 1e-10
    # the two held keys are accepted with certainty
    assert abs(accept[0] - 1) < 1e-10 and abs(accept[1] - 1) < 1e-10


def test_prfsg_game_bounds_hold():
    res = games.prfsg_game(2, 50, SEED.child("bd"))
    assert res.mean_ok and res.tail_ok
    assert res.tail_fraction == 0.0
    res1 = games.prfsg_game(1, 30, SEED.child("bd1"))
    assert res1.mean_ok and res1.tail_ok


def test_two_query_lipschitz_no_violations():
    res = games.two_query_lipschitz_check(8, 60, SEED.child("lip"))
    assert res.violations == 0 and res.ok
    # pairs at real distances, and the constant is not absurdly loose
    assert 0.005 < res.max_ratio <= 1.0


def test_family_lipschitz_no_violations():
    res = games.family_lipschitz_check(4, 2, 40, SEED.child("fam"))
    assert res.violations == 0 and res.ok
    assert res.t_queries == 4 and res.constant == 32.0
    assert res.max_ratio > 1e-4


def test_haar_concentration_bound_holds():
    res = games.haar_concentration_check(8, 200, 0.3, SEED.child("conc"))
    assert res.ok
    assert 0.0 <= res.mean_value <= 1.0
    assert res.bound > 0
