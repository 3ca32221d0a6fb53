"""Distinguishing attacks against keyed unitary and isometry candidates.

All three pipelines share one shape: tomograph the oracle blocks the
candidate actually calls, rewrite every key's circuit into an oracle-free
surrogate, form the keyed, surrogate, and fully averaged Choi states over
ell copies, then test challenges against the high singular directions of
the surrogate state. Acceptance probabilities on the report path are exact
traces; randomness enters only through the optional finite-shot tomography
mode and the final challenge bit.

Register conventions follow the averaged references: copies lead, the
entangled partner trails, and inside each copy the fresh pad qubits sit in
front of the payload. Candidate channels emit the opposite order, so their
Kraus operators are permuted once on extraction.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .blockenc import encode_density, svd_discriminate
from .budget import DEFAULT_BUDGET, Budget
from .haar import (
    haar_choi,
    haar_isometry_choi,
    reference_overlap_matrix,
    sample_haar_unitary,
)
from .linalg import DensityMatrix, _as_mat, choi_vector, schatten_norm, subsystem_perm_matrix
from .oracles import (
    PriCandidate,
    PruCandidate,
    candidate_channel,
    rewrite_surrogate,
)
from .seeds import SeedPath
from .tomography import (
    phase_aligned_distance,
    process_tomography_exact,
    process_tomography_sampled,
)
from . import subroutines

# hybrid-bound calibration: worst observed distance/term ratio across the
# unit runs stays under 2, doubled for slack
C_HYBRID = 4.0

_BACKEND_KEYS = {"ideal": "ideal", "poly": "poly", "polynomial": "poly"}


@dataclass(frozen=True)
class AttackConfig:
    p: int = 20
    ell_override: int | None = None
    backend: str = "ideal"
    tomography_mode: str = "exact"
    seed: SeedPath = field(default_factory=lambda: SeedPath(0))
    exponent_a: float = 1.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("target polynomial value p must be at least 2")
        if self.backend not in _BACKEND_KEYS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.tomography_mode not in ("exact", "sampled"):
            raise ValueError(f"unknown tomography mode {self.tomography_mode!r}")
        if self.exponent_a < 1:
            raise ValueError("stretch exponent must be at least 1")


def default_copies(n_keys: int) -> int:
    """ceil(log2 of the key count), floored at one copy."""
    return max(1, (int(n_keys) - 1).bit_length())


# ------------------------------------------------------------------ tomography


@dataclass(frozen=True)
class TomographySet:
    """Learned stand-ins for every oracle block the candidate may call."""

    estimates: dict
    truths: dict
    errors: dict
    queries: int
    mode: str
    eps_claimed: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)


def _called_specs(cand) -> tuple[set, set]:
    swap_ns: set = set()
    hri_keys: set = set()
    for circ in cand.circuits.values():
        for step in circ.steps:
            if hasattr(step, "m"):
                hri_keys.add((step.n, step.m))
            elif hasattr(step, "n"):
                swap_ns.add(step.n)
    return swap_ns, hri_keys


def tomograph_called_blocks(
    cand,
    swap=None,
    hri=None,
    *,
    d_cutoff: int,
    mode: str = "exact",
    eps: float = 0.0,
    eta: float = 0.0,
    seed: SeedPath = SeedPath(0),
    budget: Budget = DEFAULT_BUDGET,
) -> TomographySet:
    """Run process tomography on each distinct block called at size <= d_cutoff.

    Swap-family calls are keyed by n, rotation-family calls by (n, m). Calls
    above the cutoff are left for deletion and cost nothing here.
    """
    swap_ns, hri_keys = _called_specs(cand)
    estimates: dict = {}
    truths: dict = {}
    errors: dict = {}
    queries = 0
    for n in sorted(swap_ns):
        if n > d_cutoff:
            continue
        if swap is None:
            raise ValueError("candidate queries the swap family but none was given")
        gate = swap.dense_oracle(n, budget).mat
        res = _tomograph_gate(gate, mode, eps, eta, seed.child("tomo-swap", n))
        estimates[n] = res.estimate
        truths[n] = gate
        errors[n] = phase_aligned_distance(res.estimate, gate, 2)
        queries += res.queries
    for n, m in sorted(hri_keys):
        if n > d_cutoff:
            continue
        if hri is None:
            raise ValueError("candidate queries the rotation family but none was given")
        gate = hri.oracle(n, m, budget).mat
        res = _tomograph_gate(gate, mode, eps, eta, seed.child("tomo-rot", n).child("m", m))
        estimates[(n, m)] = res.estimate
        truths[(n, m)] = gate
        errors[(n, m)] = phase_aligned_distance(res.estimate, gate, 2)
        queries += res.queries
    return TomographySet(estimates, truths, errors, queries, mode, eps)


def _tomograph_gate(gate: np.ndarray, mode: str, eps: float, eta: float, seed: SeedPath):
    if mode == "exact":
        return process_tomography_exact(lambda v: gate @ v, gate.shape[0])
    return process_tomography_sampled(lambda v: gate @ v, gate.shape[0], eps, eta, seed)


# ------------------------------------------------------------------ surrogates


@dataclass(frozen=True)
class SurrogateFamily:
    """Oracle-free rewrites of a candidate, learned and reference variants.

    circuits holds the tomography-based rewrite used by the attacks;
    exact_small is the companion family where every kept call is the true
    gate, isolating the deletion error from the learning error.
    """

    lam: int
    stretch_s: int
    ancilla_c: int
    d_cutoff: int
    circuits: dict
    exact_small: dict
    deleted: dict
    replacement_errors: dict
    eps_claimed: float
    tomography_mode: str
    tomography_queries: int

    def __post_init__(self):
        for circ in list(self.circuits.values()) + list(self.exact_small.values()):
            if circ.query_count:
                raise ValueError("surrogate circuits must be oracle-free")

    @property
    def keys(self) -> tuple:
        return tuple(sorted(self.circuits))

    @property
    def deleted_total(self) -> int:
        return sum(self.deleted.values())


def build_surrogates(cand, tomo: TomographySet, d_cutoff: int) -> SurrogateFamily:
    """Rewrite every key's circuit in surrogate and exact-small modes."""
    circuits = {}
    exact_small = {}
    deleted = {}
    for k in cand.keys:
        circuits[k], deleted[k] = rewrite_surrogate(
            cand.circuits[k], d_cutoff, tomo.estimates, mode="surrogate"
        )
        exact_small[k], _ = rewrite_surrogate(
            cand.circuits[k], d_cutoff, tomo.truths, mode="exact-small"
        )
    return SurrogateFamily(
        lam=cand.lam,
        stretch_s=cand.stretch_s,
        ancilla_c=cand.ancilla_c,
        d_cutoff=d_cutoff,
        circuits=circuits,
        exact_small=exact_small,
        deleted=deleted,
        replacement_errors=dict(tomo.errors),
        eps_claimed=tomo.eps_claimed,
        tomography_mode=tomo.mode,
        tomography_queries=tomo.queries,
    )


def surrogate_candidate(sf: SurrogateFamily, which: str = "surrogate"):
    """The rewritten family as a candidate of the matching kind."""
    if which not in ("surrogate", "exact-small"):
        raise ValueError(f"unknown surrogate variant {which!r}")
    circuits = sf.circuits if which == "surrogate" else sf.exact_small
    if sf.stretch_s:
        return PriCandidate(sf.lam, sf.stretch_s, sf.ancilla_c, circuits)
    return PruCandidate(sf.lam, sf.ancilla_c, circuits)


# ------------------------------------------------------------------ Choi states


def _channel_kraus(cand, key, swap, hri, budget: Budget) -> list[np.ndarray]:
    ks = candidate_channel(cand, key, swap=swap, hri=hri, budget=budget).kraus()
    s = cand.stretch_s
    if s:
        # candidate output order is [payload, pad]; references want the pad first
        p = subsystem_perm_matrix([2**cand.lam, 2**s], [1, 0])
        ks = [p @ k for k in ks]
    return ks


def _fold_ops(kraus: list[np.ndarray], ell: int) -> list[np.ndarray]:
    ops = [np.ones((1, 1), dtype=np.complex128)]
    for _ in range(ell):
        ops = [np.kron(op, k) for op in ops for k in kraus]
    return ops


def keyed_choi_vectors(
    cand, swap=None, hri=None, *, ell: int, budget: Budget = DEFAULT_BUDGET
) -> tuple[list[np.ndarray], np.ndarray, int]:
    """ell-fold Kraus operators of every key and their Choi vectors as columns.

    Each key contributes 2^(c ell) operators; the keyed Choi state is the
    uniform key average of the per-key vector outer products, so the vectors
    returned here carry everything the dense state and the support projector
    need.
    """
    budget.check_qubits((2 * cand.lam + cand.stretch_s) * ell, "keyed state vectors")
    ops: list[np.ndarray] = []
    for k in cand.keys:
        ops.extend(_fold_ops(_channel_kraus(cand, k, swap, hri, budget), ell))
    vecs = np.column_stack([choi_vector(op) for op in ops])
    return ops, vecs, len(cand.keys)


def keyed_choi(
    cand, swap=None, hri=None, *, ell: int, budget: Budget = DEFAULT_BUDGET
) -> DensityMatrix:
    """Uniform-key average of the ell-fold Choi states, work register traced."""
    qubits = (2 * cand.lam + cand.stretch_s) * ell
    budget.check_dense_matrix(qubits, "keyed reference state")
    _, vecs, n_keys = keyed_choi_vectors(cand, swap, hri, ell=ell, budget=budget)
    return DensityMatrix((vecs @ vecs.conj().T) / n_keys)


def key_choi(
    cand, key, swap=None, hri=None, *, ell: int, budget: Budget = DEFAULT_BUDGET
) -> DensityMatrix:
    """Choi state of a single key, for keyed challenges."""
    qubits = (2 * cand.lam + cand.stretch_s) * ell
    budget.check_dense_matrix(qubits, "single-key state")
    ops = _fold_ops(_channel_kraus(cand, key, swap, hri, budget), ell)
    vecs = np.column_stack([choi_vector(op) for op in ops])
    return DensityMatrix(vecs @ vecs.conj().T)


def surrogate_choi(
    sf: SurrogateFamily, *, ell: int, which: str = "surrogate", budget: Budget = DEFAULT_BUDGET
) -> DensityMatrix:
    return keyed_choi(surrogate_candidate(sf, which), ell=ell, budget=budget)


# ------------------------------------------------------------------ support overlap


def support_overlap(
    cand, swap=None, hri=None, *, ell: int, budget: Budget = DEFAULT_BUDGET
) -> float:
    """Exact weight the averaged reference puts on the keyed support.

    Tr[Q rho2] with Q the projector onto the span of the keyed Choi
    vectors. Uses the frame identity Tr[Q rho2] = Tr[G^+ H] with G the
    vector Gram matrix and H the reference overlap matrix, so the reference
    itself is never materialized and the cost is set by the key count, not
    the register size.
    """
    ops, vecs, _ = keyed_choi_vectors(cand, swap, hri, ell=ell, budget=budget)
    g = vecs.conj().T @ vecs
    h = reference_overlap_matrix(
        ops, 2**cand.lam, 2 ** (cand.lam + cand.stretch_s), ell
    )
    gp = np.linalg.pinv(g, rcond=1e-10, hermitian=True)
    return float(np.real(np.trace(gp @ h)))


def support_chain_bound(lam: int, s: int, c: int, ell: int) -> float:
    """Rank-over-symmetric-dimension cap plus the permutation-twirl slack."""
    rank_cap = 2 ** ((1 + c) * ell)
    sym = math.comb(2 ** (2 * lam + s) + ell - 1, ell)
    return rank_cap / sym + 4.0 * ell**2 / 2 ** (lam + s)


# ------------------------------------------------------------------ distinguisher


def distinguisher(
    rho_surrogate,
    input_state,
    n_qubits: int,
    lam: int,
    backend: str = "ideal",
    seed=SeedPath(0),
    eta: float | None = None,
) -> tuple[bool, float]:
    """Threshold test of a challenge against the surrogate's singular support.

    Block-encodes the surrogate state and accepts when the challenge sits in
    singular directions of value above the window (2^-3n, 2^-2n). eta
    defaults to 2^-lam; the returned probability is the exact trace, the bit
    a single seeded Bernoulli draw from it.
    """
    rho = _as_mat(rho_surrogate)
    state = _as_mat(input_state)
    if rho.shape[0] != 2**n_qubits:
        raise ValueError("surrogate state does not match the stated qubit count")
    if state.shape[0] != rho.shape[0]:
        raise ValueError("challenge state does not match the surrogate state")
    a = 2.0 ** (-3 * n_qubits)
    b = 2.0 ** (-2 * n_qubits)
    if eta is None:
        eta = 2.0 ** (-lam)
    be = encode_density(rho)
    res = svd_discriminate(be, state, a, b, eta, backend=_BACKEND_KEYS[backend], seed=seed)
    return res.accept, res.accept_prob


# ------------------------------------------------------------------ attack drivers


@dataclass(frozen=True)
class AttackReport:
    kind: str
    lam: int
    ell: int
    t_queries: int
    ancilla_c: int
    stretch_s: int
    d_cutoff: int
    p: int
    backend: str
    tomography_mode: str
    accept_keyed: float
    accept_haar: float
    accept_self: float
    advantage: float
    hybrid_distance: float
    hybrid_bound: float
    eps_term: float
    deletion_term: float
    eps_claimed: float
    max_replacement_error: float
    deleted_calls: int
    tomography_queries: int
    composition_floor: float
    exact_probabilities: bool
    challenge_kind: str | None
    challenge_bit: bool | None
    challenge_prob: float | None
    crossings: tuple
    seed: str
    wall_ms: int

    def as_dict(self) -> dict:
        out = asdict(self)
        out["crossings"] = [dict(entry) for entry in self.crossings]
        return out


def _cutoff(kind: str, ell: int, t_queries: int, cfg: AttackConfig, c: int, s: int) -> int:
    # a candidate that never queries needs no learned blocks at all
    if t_queries == 0:
        return 0
    base = 2 * math.log2(ell * t_queries * cfg.p)
    if kind == "pru":
        return math.ceil(base) + c
    if kind == "pri":
        return math.ceil(base) + 3 * c + 2 * s
    return math.ceil((base + 2 * s + 3 * c) ** (1.0 / cfg.exponent_a))


def _deletion_term(kind: str, ell: int, t_queries: int, c: int, s: int, denom_exp: float) -> float:
    if t_queries == 0:
        return 0.0
    coef = 2.0 ** (c / 2.0) if kind == "pru" else 2.0 ** (s + 1.5 * c)
    return coef * ell * t_queries / 2.0 ** (denom_exp / 2.0)


def _run_attack(kind, cand, swap, hri, cfg, challenge, budget) -> AttackReport:
    t0 = time.perf_counter()
    with subroutines.capture() as crossings:
        lam, s, c = cand.lam, cand.stretch_s, cand.ancilla_c
        ell = cfg.ell_override if cfg.ell_override is not None else default_copies(len(cand.keys))
        t_queries = cand.query_count
        n_qubits = (2 * lam + s) * ell
        budget.check_qubits(n_qubits, "attack states")
        budget.check_dense_matrix(n_qubits, "attack states")

        d_cut = _cutoff(kind, ell, t_queries, cfg, c, s)
        eps_claimed = 0.0 if t_queries == 0 else 1.0 / (ell * t_queries * cfg.p)
        tomo = tomograph_called_blocks(
            cand,
            swap,
            hri,
            d_cutoff=d_cut,
            mode=cfg.tomography_mode,
            eps=eps_claimed,
            eta=eps_claimed,
            seed=cfg.seed.child("tomo"),
            budget=budget,
        )
        sf = build_surrogates(cand, tomo, d_cut)

        rho_keyed = keyed_choi(cand, swap, hri, ell=ell, budget=budget)
        rho_sur = surrogate_choi(sf, ell=ell, budget=budget)
        if s:
            rho_ref = haar_isometry_choi(lam, s, ell, budget)
        else:
            rho_ref = haar_choi(lam, ell, budget)

        hybrid = schatten_norm(rho_keyed.mat - rho_sur.mat, 1)
        eps_term = ell * t_queries * eps_claimed
        denom_exp = hri.t_of(d_cut) if kind == "hri" and hri is not None else d_cut
        deletion = _deletion_term(kind, ell, t_queries, c, s, denom_exp)
        # the additive floor absorbs rounding on query-free candidates
        bound = C_HYBRID * (eps_term + deletion) + 1e-9

        bk = cfg.backend
        _, p_self = distinguisher(rho_sur, rho_sur, n_qubits, lam, bk, cfg.seed.child("bit-self"))
        _, p_keyed = distinguisher(rho_sur, rho_keyed, n_qubits, lam, bk, cfg.seed.child("bit-keyed"))
        _, p_haar = distinguisher(rho_sur, rho_ref, n_qubits, lam, bk, cfg.seed.child("bit-haar"))
        advantage = abs(p_keyed - p_haar)
        floor = p_self - hybrid / 2.0 - p_haar

        ch_kind = ch_bit = ch_prob = None
        if challenge is not None:
            ch_kind = challenge[0]
            if ch_kind == "keyed":
                rho_ch = key_choi(cand, challenge[1], swap, hri, ell=ell, budget=budget)
            elif ch_kind == "haar":
                d_out = 2 ** (lam + s)
                v = sample_haar_unitary(d_out, cfg.seed.child("haar-draw")).mat
                iso = v @ np.eye(d_out, 2**lam)
                op = _fold_ops([iso], ell)[0]
                vec = choi_vector(op)
                rho_ch = DensityMatrix(np.outer(vec, vec.conj()))
            else:
                raise ValueError(f"unknown challenge kind {ch_kind!r}")
            ch_bit, ch_prob = distinguisher(
                rho_sur, rho_ch, n_qubits, lam, bk, cfg.seed.child("bit-challenge")
            )

    return AttackReport(
        kind=kind,
        lam=lam,
        ell=ell,
        t_queries=t_queries,
        ancilla_c=c,
        stretch_s=s,
        d_cutoff=d_cut,
        p=cfg.p,
        backend=bk,
        tomography_mode=cfg.tomography_mode,
        accept_keyed=p_keyed,
        accept_haar=p_haar,
        accept_self=p_self,
        advantage=advantage,
        hybrid_distance=hybrid,
        hybrid_bound=bound,
        eps_term=eps_term,
        deletion_term=deletion,
        eps_claimed=eps_claimed,
        max_replacement_error=tomo.max_error,
        deleted_calls=sf.deleted_total,
        tomography_queries=tomo.queries,
        composition_floor=floor,
        exact_probabilities=True,
        challenge_kind=ch_kind,
        challenge_bit=ch_bit,
        challenge_prob=ch_prob,
        crossings=tuple(crossings),
        seed=cfg.seed.describe(),
        wall_ms=int((time.perf_counter() - t0) * 1000),
    )


def attack_pru(
    cand: PruCandidate,
    swap=None,
    cfg: AttackConfig = AttackConfig(),
    challenge=None,
    budget: Budget = DEFAULT_BUDGET,
) -> AttackReport:
    """Keyed-unitary attack: learn small swap blocks, project, threshold."""
    return _run_attack("pru", cand, swap, None, cfg, challenge, budget)


def attack_pri(
    cand: PriCandidate,
    swap=None,
    cfg: AttackConfig = AttackConfig(),
    challenge=None,
    budget: Budget = DEFAULT_BUDGET,
) -> AttackReport:
    """Keyed-isometry attack; the averaged reference carries the pad register."""
    return _run_attack("pri", cand, swap, None, cfg, challenge, budget)


def attack_pri_vs_hri(
    cand,
    hri=None,
    cfg: AttackConfig = AttackConfig(),
    challenge=None,
    budget: Budget = DEFAULT_BUDGET,
) -> AttackReport:
    """Attack against candidates built over the hidden-rotation family.

    The cutoff exponent is stretched by 1/a and the deletion denominator
    uses t(d) in place of d; everything else matches the isometry attack.
    """
    return _run_attack("hri", cand, None, hri, cfg, challenge, budget)


_ATTACKS = {"pru": attack_pru, "pri": attack_pri, "hri": attack_pri_vs_hri}


def advantage_exact(
    cand,
    swap=None,
    hri=None,
    cfg: AttackConfig = AttackConfig(),
    attack: str = "pru",
    budget: Budget = DEFAULT_BUDGET,
) -> float:
    """Exact distinguishing advantage of the chosen pipeline on this candidate."""
    if attack not in _ATTACKS:
        raise ValueError(f"unknown attack {attack!r}")
    if attack == "hri":
        report = attack_pri_vs_hri(cand, hri, cfg, budget=budget)
    else:
        report = _ATTACKS[attack](cand, swap, cfg, budget=budget)
    return report.advantage
