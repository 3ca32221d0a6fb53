"""Experiment harness: named checks, attack presets, reports, suites.

Every check reduces to one scalar comparison, lhs <= calibration * bound,
and reports the seed label plus wall time so a run can be replayed or
diffed. Bounds that hold with an absolute constant use calibration 1;
rate bounds stated up to a constant use the calibration frozen here.
Reports serialize to json (lossless modulo timing) or flat csv rows; a
sweep writes an x,y companion file next to the main one.

Checks run on a small thread pool since they are pure numpy. Attacks run
serially: the crossing recorder in subroutines is process global, and two
concurrent attacks would interleave their entries.
"""
from __future__ import annotations

import contextlib
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy
from scipy.linalg import expm

from . import __version__, adversary, blockenc, games, haar
from . import linalg as la
from .adversary import AttackConfig, AttackReport
from .oracles import HriOracleFamily, SwapOracleFamily
from .seeds import SeedPath
from .toys import toy_hri_candidate, toy_pri_candidate, toy_pru_candidate

# ------------------------------------------------------------------- results


@dataclass(frozen=True)
class LemmaCheckResult:
    """One scalar check: passed iff lhs / bound <= calibration."""

    lemma_id: str
    params: dict
    lhs: float
    bound: float
    ratio: float
    calibration: float
    passed: bool
    seed: str
    runtime_ms: int

    def as_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "params": dict(self.params),
            "lhs": self.lhs,
            "bound": self.bound,
            "ratio": self.ratio,
            "calibration": self.calibration,
            "pass": self.passed,
            "seed": self.seed,
            "runtime_ms": self.runtime_ms,
        }


def _take(params: dict, **defaults):
    """Fill defaults and coerce to the default's type; unknown keys fault."""
    extra = sorted(set(params) - set(defaults))
    if extra:
        raise ValueError(f"unknown parameters {extra}, expected from {sorted(defaults)}")
    return {k: type(v)(params.get(k, v)) for k, v in defaults.items()}


def _ginibre(rng: np.random.Generator, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def _rand_density(rng: np.random.Generator, d: int) -> np.ndarray:
    g = _ginibre(rng, d)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# ---------------------------------------------------------- norm inequalities


def _gentle_measurement(params: dict, seed: SeedPath):
    p = _take(params, d=8, trials=30)
    d, worst = p["d"], 0.0
    for i in range(p["trials"]):
        sub = seed.child("inst", i)
        rng = sub.rng()
        if i % 2 == 0:
            # rank d-2 projector on a pure state sits exactly at the bound
            basis = la.random_unitary_from(rng, d)
            m = basis[:, : d - 2] @ basis[:, : d - 2].conj().T
            psi = la.random_state_from(rng, d)
            rho = np.outer(psi, psi.conj())
        else:
            basis = la.random_unitary_from(rng, d)
            m = (basis * rng.uniform(0.2, 1.0, size=d)) @ basis.conj().T
            rho = _rand_density(rng, d)
        eps = 1.0 - float(np.real(np.trace(m @ rho)))
        if eps < 1e-12 or eps > 0.95:
            continue
        _, dist = la.gentle_residual(m, rho)
        worst = max(worst, dist / math.sqrt(eps))
    return p, worst, 1.0, 1.0 + 1e-9


def _holder_product(params: dict, seed: SeedPath):
    p = _take(params, d=6, trials=40)
    d, worst = p["d"], 0.0
    for i in range(p["trials"]):
        rng = seed.child("inst", i).rng()
        a, b = _ginibre(rng, d), _ginibre(rng, d)
        sp = (1.0, 2.0, np.inf)[i % 3]
        num = la.schatten_norm(a @ b, sp)
        den = la.schatten_norm(a, sp) * la.schatten_norm(b, np.inf)
        worst = max(worst, num / den)
    return p, worst, 1.0, 1.0 + 1e-9


def _two_query_lipschitz(params: dict, seed: SeedPath):
    p = _take(params, d=8, trials=100)
    res = games.two_query_lipschitz_check(p["d"], p["trials"], seed)
    return p, res.max_ratio, 1.0, 1.0 + 1e-9


def _conjugation_lipschitz(params: dict, seed: SeedPath):
    p = _take(params, d=8, trials=100)
    d, worst = p["d"], 0.0
    for i in range(p["trials"]):
        sub = seed.child("pair", i)
        rng = sub.rng()
        u = la.random_unitary_from(rng, d)
        h = _ginibre(rng, d)
        h = (h + h.conj().T) / 2
        scale = 10.0 ** (-3 + 3.5 * i / max(1, p["trials"] - 1))
        v = u @ expm(1j * (scale / np.linalg.norm(h, 2)) * h)
        psi = la.random_state_from(rng, d)
        ru = np.outer(u @ psi, np.conj(u @ psi))
        rv = np.outer(v @ psi, np.conj(v @ psi))
        gap = np.linalg.norm(ru - rv)
        dist = np.linalg.norm(u - v)
        if dist > 1e-14:
            worst = max(worst, float(gap / (2.0 * dist)))
    return p, worst, 1.0, 1.0 + 1e-9


def _family_lipschitz(params: dict, seed: SeedPath):
    p = _take(params, d=4, members=2, trials=50)
    res = games.family_lipschitz_check(p["d"], p["members"], p["trials"], seed)
    return p, res.max_ratio, 1.0, 1.0 + 1e-9


# ------------------------------------------------------- moments and twirl rates


def _state_moment_mc(params: dict, seed: SeedPath):
    p = _take(params, d=4, ell=2, samples=20_000)
    got = haar.state_moment_mc(p["d"], p["ell"], p["samples"], seed)
    dist = la.trace_distance(got, haar.state_moment_exact(p["d"], p["ell"]))
    # budgeted at 0.02 for 1e5 draws, scaled by the usual mc root law
    bound = 0.02 * math.sqrt(1e5 / p["samples"])
    return p, dist, bound, 1.0


def _pair_to_block(mat: np.ndarray, d_copy: int, d_partner: int, ell: int) -> np.ndarray:
    dims = [d_copy, d_partner] * ell
    perm = list(range(0, 2 * ell, 2)) + list(range(1, 2 * ell, 2))
    return la.permute_subsystems(mat, dims, perm)


def _twirl_choi_rate(params: dict, seed: SeedPath):
    p = _take(params, lam=2, ell=2)
    lam, ell = p["lam"], p["ell"]
    ref = haar.haar_choi(lam, ell)
    mom = _pair_to_block(haar.state_moment_exact(2 ** (2 * lam), ell).mat, 2**lam, 2**lam, ell)
    return p, la.trace_distance(ref.mat, mom), ell**2 / 2**lam, 4.0


def _isometry_choi_rate(params: dict, seed: SeedPath):
    p = _take(params, lam=1, s=1, ell=2)
    lam, s, ell = p["lam"], p["s"], p["ell"]
    ref = haar.haar_isometry_choi(lam, s, ell)
    mom = _pair_to_block(
        haar.state_moment_exact(2 ** (2 * lam + s), ell).mat, 2 ** (lam + s), 2**lam, ell
    )
    return p, la.trace_distance(ref.mat, mom), ell**2 / 2 ** (lam + s), 4.0


def _permutation_twirl_rate(params: dict, seed: SeedPath):
    p = _take(params, n=2, ell=2)
    n, ell = p["n"], p["ell"]
    rho = _rand_density(seed.rng(), 2 ** (n * ell) * 2)
    exact = haar.twirl_exact(rho, 2**n, ell)
    approx = haar.twirl_permutation_approx(rho, n, ell)
    dist = la.trace_distance(exact.mat, (approx + approx.conj().T) / 2)
    return p, dist, ell**2 / 2**n, 4.0


# --------------------------------------------------------- oracle identities


def _choi_shrinkage(params: dict, seed: SeedPath):
    p = _take(params, n=3)
    n = p["n"]
    member = SwapOracleFamily(seed.child("family")).dense_oracle(n).mat
    measured = np.linalg.norm(np.eye(member.shape[0]) - member) / math.sqrt(2 ** (2 * n + 1))
    return p, abs(measured - 2 ** ((1 - n) / 2)), 1e-9, 1.0


def _hri_trace(params: dict, seed: SeedPath):
    p = _take(params, n=2, stretch="n")
    n = p["n"]
    fam = HriOracleFamily(seed.child("family"), stretch=p["stretch"])
    t = fam.t_of(n)
    expected = 2 ** (n + t + 1) - 2 ** (n + 1)
    worst = max(
        abs(float(np.real(np.trace(fam.oracle(n, m).mat))) - expected)
        for m in range(min(4, 2**n))
    )
    return p, worst, 1e-9, 1.0


def _omega_transpose(params: dict, seed: SeedPath):
    p = _take(params, trials=50)
    worst = 0.0
    for i in range(p["trials"]):
        rng = seed.child("iso", i).rng()
        d_in = int(rng.integers(2, 7))
        d_out = int(rng.integers(d_in, 9))
        q, _ = np.linalg.qr(_ginibre(rng, d_out, d_in))
        worst = max(worst, la.transpose_identity_residual(q))
    return p, worst, 1e-10, 1.0


def _one_call_distance(width: int, span: int, gate: np.ndarray, lam: int, seed: SeedPath) -> float:
    """Trace distance a single embedded oracle call makes inside a random
    circuit holding half of a maximally entangled pair."""
    rng = seed.rng()
    u = la.random_unitary_from(rng, 2**width)
    v = la.random_unitary_from(seed.child("v").rng(), 2**width)
    embedded = np.kron(gate, np.eye(2 ** (width - span)))
    base = np.kron(np.eye(2**(width - lam), 1)[:, 0], la.omega_vector(2**lam))
    # circuit register leads, partner register trails: apply via one reshape
    def act(mat):
        return (mat @ base.reshape(2**width, 2**lam)).reshape(-1)
    psi = act(u @ embedded @ v)
    phi = act(u @ v)
    ov = abs(np.vdot(phi, psi)) ** 2
    return math.sqrt(max(0.0, 1.0 - ov))


def _swap_call_closeness(params: dict, seed: SeedPath):
    p = _take(params, lam=3, c=3, n=2, trials=5)
    lam, c, n = p["lam"], p["c"], p["n"]
    if 2 * n + 1 > lam + c:
        raise ValueError(f"call on 2n+1={2 * n + 1} wires exceeds width {lam + c}")
    fam = SwapOracleFamily(seed.child("family"))
    gate = fam.dense_oracle(n).mat
    worst = max(
        _one_call_distance(lam + c, 2 * n + 1, gate, lam, seed.child("draw", i))
        for i in range(p["trials"])
    )
    return p, worst, 2.0 ** ((c - n) / 2), 4.0


def _hri_call_closeness(params: dict, seed: SeedPath):
    p = _take(params, lam=3, c=3, n=1, stretch="n", trials=5)
    lam, c, n = p["lam"], p["c"], p["n"]
    fam = HriOracleFamily(seed.child("family"), stretch=p["stretch"])
    t = fam.t_of(n)
    if 1 + t + n > lam + c:
        raise ValueError(f"call on 1+t+n={1 + t + n} wires exceeds width {lam + c}")
    worst = max(
        _one_call_distance(
            lam + c, 1 + t + n, fam.oracle(n, i % 2**n).mat, lam, seed.child("draw", i)
        )
        for i in range(p["trials"])
    )
    return p, worst, 2.0 ** (c - t / 2), 4.0


def _support_overlap(params: dict, seed: SeedPath):
    p = _take(params, lam=2, ell=2, keys=4)
    cand = toy_pru_candidate(p["lam"], p["keys"], seed.child("cand"))
    weight = adversary.support_overlap(cand, ell=p["ell"])
    return p, weight, adversary.support_chain_bound(p["lam"], 0, 0, p["ell"]), 1.0


# ------------------------------------------------------------- spectral caps


def _perturbed_unitary(seed: SeedPath, d: int, p_exp: int):
    rng = seed.rng()
    u = la.random_unitary_from(rng, d)
    h = _ginibre(rng, d)
    h = (h + h.conj().T) / 2
    h /= np.linalg.norm(h, 2)
    delta = 2.0 ** (-p_exp - 1)
    return u @ expm(1j * delta * h) * (1.0 - delta)


def _sv_tail_mass(params: dict, seed: SeedPath):
    p = _take(params, n=3, trials=5)
    n = p["n"]
    p_exp = 4 * n
    eps = 2.0 ** (-2 * n)
    worst = 0.0
    for i in range(p["trials"]):
        sub = seed.child("inst", i)
        enc = blockenc.dilation_encoding(_perturbed_unitary(sub, 2**n, p_exp))
        rho = _rand_density(sub.child("rho").rng(), 2**n)
        mass, _ = blockenc.tail_mass_bounds(enc, rho, eps, p_exp)
        worst = max(worst, 1.0 - mass)
    return p, worst, 2.0 ** (n - p_exp + 1) + 2.0**n * eps, 1.0


def _kernel_leakage(params: dict, seed: SeedPath):
    p = _take(params, n=3, trials=5)
    n = p["n"]
    d, p_exp = 2**n, 4 * n
    eps = 2.0 ** (-2 * n)
    worst = 0.0
    for i in range(p["trials"]):
        rng = seed.child("inst", i).rng()
        u = la.random_unitary_from(rng, d)
        w = la.random_unitary_from(rng, d)
        sv = np.sort(rng.uniform(0.3, 0.9, size=d))[::-1]
        sv[-1] = 0.0
        m = u @ np.diag(sv) @ w.conj().T
        e = _ginibre(rng, d)
        a = m + 2.0 ** (-p_exp - 1) * (e / np.linalg.norm(e, 2))
        leak, _ = blockenc.kernel_leakage_bounds(
            blockenc.dilation_encoding(a), w[:, -1], eps, p_exp
        )
        worst = max(worst, leak)
    return p, worst, 2.0 ** (-p_exp) / eps, 1.0


# -------------------------------------------------------------- game checks


def _haar_concentration(params: dict, seed: SeedPath):
    p = _take(params, d=8, trials=200, delta=0.3)
    res = games.haar_concentration_check(p["d"], p["trials"], p["delta"], seed)
    return p, res.exceed_fraction, res.bound, 1.0


def _prfsg_mean(params: dict, seed: SeedPath):
    p = _take(params, lam=2, trials=200)
    res = games.prfsg_game(p["lam"], p["trials"], seed)
    return p, abs(res.mean_advantage), res.mean_bound, 1.0


def _prfsg_tail(params: dict, seed: SeedPath):
    p = _take(params, lam=2, trials=200)
    res = games.prfsg_game(p["lam"], p["trials"], seed)
    return p, res.tail_fraction, res.tail_bound, 1.0


CHECKS = {
    "gentle-measurement": _gentle_measurement,
    "holder-product": _holder_product,
    "two-query-lipschitz": _two_query_lipschitz,
    "conjugation-lipschitz": _conjugation_lipschitz,
    "family-lipschitz": _family_lipschitz,
    "state-moment-mc": _state_moment_mc,
    "twirl-choi-rate": _twirl_choi_rate,
    "isometry-choi-rate": _isometry_choi_rate,
    "permutation-twirl-rate": _permutation_twirl_rate,
    "choi-shrinkage": _choi_shrinkage,
    "hri-trace": _hri_trace,
    "omega-transpose": _omega_transpose,
    "swap-call-closeness": _swap_call_closeness,
    "hri-call-closeness": _hri_call_closeness,
    "support-overlap": _support_overlap,
    "sv-tail-mass": _sv_tail_mass,
    "kernel-leakage": _kernel_leakage,
    "haar-concentration": _haar_concentration,
    "prfsg-mean-advantage": _prfsg_mean,
    "prfsg-tail": _prfsg_tail,
}


def lemma_check(lemma_id: str, params: dict | None = None, seed: SeedPath | None = None) -> LemmaCheckResult:
    """Run one named check and wrap the comparison into a result row."""
    if lemma_id not in CHECKS:
        raise ValueError(f"unknown check {lemma_id!r}; known: {', '.join(sorted(CHECKS))}")
    seed = seed if seed is not None else SeedPath(0)
    t0 = time.perf_counter()
    resolved, lhs, bound, calibration = CHECKS[lemma_id](dict(params or {}), seed)
    ratio = lhs / bound
    return LemmaCheckResult(
        lemma_id=lemma_id,
        params=resolved,
        lhs=float(lhs),
        bound=float(bound),
        ratio=float(ratio),
        calibration=float(calibration),
        passed=bool(ratio <= calibration),
        seed=seed.describe(),
        runtime_ms=int(round((time.perf_counter() - t0) * 1000)),
    )


# -------------------------------------------------------------- experiments

_KINDS = (
    "lemma",
    "attack-pru",
    "attack-pri",
    "attack-pri-vs-hri",
    "prfsg-game",
    "suite-fast",
    "suite-all",
)

# per-config fields a lemma run forwards into the check parameters
_LEMMA_FIELDS = ("lam", "ell", "s", "c", "trials")


@dataclass(frozen=True)
class ExperimentConfig:
    """One harness invocation; None means the item's own default applies."""

    kind: str = "lemma"
    lemma_ids: tuple = ()
    lam: int | None = None
    ell: int | None = None
    s: int | None = None
    c: int | None = None
    p: int | None = None
    trials: int | None = None
    seed: int = 0
    backend: str | None = None
    tomography_mode: str | None = None
    out_path: str | None = None
    fmt: str = "json"
    sweep: tuple | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.fmt not in ("json", "csv"):
            raise ValueError(f"unknown report format {self.fmt!r}")
        if self.backend not in (None, "ideal", "poly", "polynomial"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.tomography_mode not in (None, "exact", "sampled"):
            raise ValueError(f"unknown tomography mode {self.tomography_mode!r}")
        object.__setattr__(self, "lemma_ids", tuple(self.lemma_ids))
        if self.sweep is not None:
            param, values = self.sweep
            if not values:
                raise ValueError("sweep needs at least one value")
            object.__setattr__(self, "sweep", (str(param), tuple(values)))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lemma_ids": list(self.lemma_ids),
            "lam": self.lam,
            "ell": self.ell,
            "s": self.s,
            "c": self.c,
            "p": self.p,
            "trials": self.trials,
            "seed": self.seed,
            "backend": self.backend,
            "tomography_mode": self.tomography_mode,
            "out_path": self.out_path,
            "fmt": self.fmt,
            "sweep": None if self.sweep is None else [self.sweep[0], list(self.sweep[1])],
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("sweep") is not None:
            d["sweep"] = (d["sweep"][0], tuple(d["sweep"][1]))
        return cls(**d)


@dataclass(frozen=True)
class Report:
    config: ExperimentConfig
    results: tuple
    versions: dict
    total_runtime_ms: int


def result_passed(res) -> bool:
    if isinstance(res, LemmaCheckResult):
        return res.passed
    return res.hybrid_distance <= res.hybrid_bound


def _versions() -> dict:
    return {
        "schema": 1,
        "package": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def report_to_dict(report: Report) -> dict:
    return {
        "config": report.config.as_dict(),
        "results": [r.as_dict() for r in report.results],
        "versions": dict(report.versions),
        "total_runtime_ms": report.total_runtime_ms,
    }


def report_from_dict(d: dict) -> Report:
    results = []
    for row in d["results"]:
        if "lemma_id" in row:
            row = dict(row)
            row["passed"] = row.pop("pass")
            results.append(LemmaCheckResult(**row))
        else:
            row = dict(row)
            row["crossings"] = tuple(row["crossings"])
            results.append(AttackReport(**row))
    return Report(
        config=ExperimentConfig.from_dict(d["config"]),
        results=tuple(results),
        versions=dict(d["versions"]),
        total_runtime_ms=d["total_runtime_ms"],
    )


def strip_timing(report: Report) -> Report:
    """Zero every wall-clock field; what remains is seed-determined."""
    rows = tuple(
        replace(r, runtime_ms=0) if isinstance(r, LemmaCheckResult) else replace(r, wall_ms=0)
        for r in report.results
    )
    return replace(report, results=rows, total_runtime_ms=0)


# ------------------------------------------------------------------ running


def _lemma_params(cfg: ExperimentConfig) -> dict:
    out = {k: getattr(cfg, k) for k in _LEMMA_FIELDS if getattr(cfg, k) is not None}
    out.update(cfg.extra)
    return out


def _toy_for(kind: str, cfg: ExperimentConfig, root: SeedPath):
    lam = cfg.lam if cfg.lam is not None else 2
    s = cfg.s if cfg.s is not None else 1
    c = cfg.c if cfg.c is not None else 0
    keys = int(cfg.extra.get("keys", min(2**lam, 4)))
    seed = root.child("cand")
    if kind == "pru":
        calls = int(cfg.extra.get("calls", 1 if lam + c >= 3 else 0))
        cand = toy_pru_candidate(lam, keys, seed, c=c, swap_calls=calls)
        fam = SwapOracleFamily(root.child("family")) if calls else None
    elif kind == "pri":
        calls = int(cfg.extra.get("calls", 1 if lam + s + c >= 3 else 0))
        cand = toy_pri_candidate(lam, s, keys, seed, c=c, swap_calls=calls)
        fam = SwapOracleFamily(root.child("family")) if calls else None
    else:
        calls = int(cfg.extra.get("calls", 1 if lam + c >= 3 else 0))
        cand = toy_hri_candidate(lam, keys, seed, c=c, rot_calls=calls)
        fam = HriOracleFamily(root.child("family")) if calls else None
    return cand, fam


def _run_attack(kind: str, cfg: ExperimentConfig, root: SeedPath) -> AttackReport:
    cand, fam = _toy_for(kind, cfg, root)
    acfg = AttackConfig(
        p=cfg.p if cfg.p is not None else 20,
        ell_override=cfg.ell,
        backend=cfg.backend or "ideal",
        tomography_mode=cfg.tomography_mode or "exact",
        seed=root.child("attack"),
        exponent_a=float(cfg.extra.get("a", 1.0)),
    )
    if kind == "pru":
        return adversary.attack_pru(cand, fam, acfg)
    if kind == "pri":
        return adversary.attack_pri(cand, fam, acfg)
    return adversary.attack_pri_vs_hri(cand, fam, acfg)


# trial counts the two suite profiles pin on top of the check defaults
_SUITE_OVERRIDES = {
    "fast": {
        "two-query-lipschitz": {"trials": 40},
        "conjugation-lipschitz": {"trials": 40},
        "family-lipschitz": {"trials": 25},
        "haar-concentration": {"trials": 100},
        "omega-transpose": {"trials": 20},
        "prfsg-mean-advantage": {"trials": 50},
        "prfsg-tail": {"trials": 50},
    },
    "all": {
        "state-moment-mc": {"samples": 100_000},
        "family-lipschitz": {"trials": 100},
        "haar-concentration": {"trials": 400},
    },
}

_SUITE_ATTACKS = {
    "fast": [("attack-pru", {}), ("attack-pri", {}), ("attack-pri-vs-hri", {})],
    "all": [
        ("attack-pru", {"c": 1}),
        ("attack-pri", {}),
        ("attack-pri-vs-hri", {"c": 1}),
    ],
}


def _run_suite(profile: str, cfg: ExperimentConfig, root: SeedPath) -> list:
    overrides = _SUITE_OVERRIDES[profile]
    results = []
    with ThreadPoolExecutor(max_workers=4) as pool:
        futures = [
            pool.submit(lemma_check, cid, overrides.get(cid, {}), root.child(cid))
            for cid in CHECKS
        ]
        results.extend(f.result() for f in futures)
    for kind, tweaks in _SUITE_ATTACKS[profile]:
        # suites pin their attack shapes; only the seed is inherited
        sub = ExperimentConfig(kind=kind, seed=cfg.seed, **tweaks)
        results.append(_run_attack(kind.removeprefix("attack-"), sub, root.child(kind)))
    return results


def _run_single(cfg: ExperimentConfig) -> list:
    root = SeedPath(cfg.seed)
    if cfg.kind == "lemma":
        params = _lemma_params(cfg)
        with ThreadPoolExecutor(max_workers=4) as pool:
            futures = [
                pool.submit(lemma_check, cid, params, root.child(cid))
                for cid in cfg.lemma_ids
            ]
            return [f.result() for f in futures]
    if cfg.kind.startswith("attack-"):
        return [_run_attack(cfg.kind.removeprefix("attack-"), cfg, root)]
    if cfg.kind == "prfsg-game":
        params = {"lam": cfg.lam if cfg.lam is not None else 2,
                  "trials": cfg.trials if cfg.trials is not None else 200}
        return [
            lemma_check("prfsg-mean-advantage", params, root.child("prfsg-mean-advantage")),
            lemma_check("prfsg-tail", params, root.child("prfsg-tail")),
        ]
    return _run_suite(cfg.kind.removeprefix("suite-"), cfg, root)


def _with_sweep_value(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param in ("lam", "ell", "s", "c", "p", "trials", "seed"):
        return replace(cfg, sweep=None, **{param: int(value)})
    if param in ("backend", "tomography_mode"):
        return replace(cfg, sweep=None, **{param: str(value)})
    return replace(cfg, sweep=None, extra={**cfg.extra, param: value})


def run_experiment(cfg: ExperimentConfig) -> Report:
    t0 = time.perf_counter()
    if cfg.sweep is not None:
        param, values = cfg.sweep
        results = []
        for v in values:
            results.extend(_run_single(_with_sweep_value(cfg, param, v)))
    else:
        results = _run_single(cfg)
    return Report(
        config=cfg,
        results=tuple(results),
        versions=_versions(),
        total_runtime_ms=int(round((time.perf_counter() - t0) * 1000)),
    )


# ------------------------------------------------------------------ emission


def _atomic_write(path: str, text: str) -> None:
    # temp file in the same directory so the final rename never crosses mounts
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".partial-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _csv_rows(report: Report) -> list[tuple[str, dict, float, float, float, bool, str, int]]:
    rows = []
    for r in report.results:
        if isinstance(r, LemmaCheckResult):
            rows.append((r.lemma_id, r.params, r.lhs, r.bound, r.ratio, r.passed, r.seed, r.runtime_ms))
        else:
            params = {
                "lam": r.lam, "ell": r.ell, "s": r.stretch_s, "c": r.ancilla_c,
                "p": r.p, "backend": r.backend, "tomo": r.tomography_mode,
            }
            ratio = r.hybrid_distance / r.hybrid_bound if r.hybrid_bound > 0 else 0.0
            rows.append((
                "attack-" + r.kind, params, r.hybrid_distance, r.hybrid_bound,
                ratio, result_passed(r), r.seed, r.wall_ms,
            ))
    return rows


def _csv_text(report: Report) -> str:
    rows = _csv_rows(report)
    keys = sorted({k for _, params, *_ in rows for k in params})
    header = ["id"] + [f"param:{k}" for k in keys] + ["lhs", "bound", "ratio", "pass", "seed", "runtime_ms"]
    lines = [",".join(header)]
    for rid, params, lhs, bound, ratio, ok, seed, ms in rows:
        cells = [rid]
        cells += ["" if k not in params else str(params[k]) for k in keys]
        cells += [repr(lhs), repr(bound), repr(ratio), "true" if ok else "false", seed, str(ms)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _sweep_text(report: Report) -> str:
    param, values = report.config.sweep
    group, rem = divmod(len(report.results), len(values))
    if rem:
        raise ValueError("sweep results do not divide evenly across values")
    lines = [f"{param},value"]
    for i, r in enumerate(report.results):
        y = r.ratio if isinstance(r, LemmaCheckResult) else r.advantage
        lines.append(f"{values[i // group]},{y!r}")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, path: str, fmt: str = "json") -> None:
    """Write a report atomically; sweeps get an x,y companion file."""
    path = os.fspath(path)
    if fmt == "json":
        _atomic_write(path, json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        _atomic_write(path, _csv_text(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if report.config.sweep is not None:
        stem, _ = os.path.splitext(path)
        _atomic_write(stem + ".sweep.csv", _sweep_text(report))
