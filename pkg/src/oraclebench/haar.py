"""Averages over the unitary group.

Exact twirls are computed by projecting onto the span of register
permutation operators: the Gram matrix of that span has entries
d^(cycles of sigma^-1 pi), and the data vector holds the partial traces
Tr_A[(R_sigma^dag (x) I) rho]. A pseudo-inverse solve recovers the unique
operator in the span with matching data, which is exactly the twirl. The
same plumbing with fixed coefficients 2^(-n ell) gives the permutation-sum
approximation used as a comparison point, and Monte Carlo estimators of the
same averages serve as an independent route in tests.

Registers: the twirled system is the leading factor (dim d^ell), any
bystander trails. Choi-style states pair the twirled copies with one
maximally entangled partner register.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .budget import DEFAULT_BUDGET, Budget
from .linalg import (
    DensityMatrix,
    PureState,
    UnitaryMatrix,
    _as_mat,
    all_perms,
    omega_vector,
    perm_compose,
    perm_cycles,
    perm_inverse,
    perm_target_indices,
    permutation_operator,
    random_state_from,
    random_unitary_from,
    sym_projector,
)
from .seeds import SeedPath, as_generator


def sample_haar_unitary(d: int, seed) -> UnitaryMatrix:
    """Haar-distributed d x d unitary (Ginibre, QR, diagonal phase fix)."""
    return UnitaryMatrix(random_unitary_from(as_generator(seed), d))


def sample_haar_state(d: int, seed) -> PureState:
    """Haar-distributed pure state: normalized complex Gaussian vector."""
    return PureState(random_state_from(as_generator(seed), d))


def state_moment_exact(d: int, ell: int) -> DensityMatrix:
    """ell-th moment of a Haar state: symmetric projector over its dimension."""
    dim_sym = math.comb(d + ell - 1, ell)
    return DensityMatrix(sym_projector(d, ell) / dim_sym)


def state_moment_mc(d: int, ell: int, samples: int, seed) -> DensityMatrix:
    rng = as_generator(seed)
    n = d**ell
    acc = np.zeros((n, n), dtype=np.complex128)
    done = 0
    while done < samples:
        batch = min(4000, samples - done)
        z = rng.standard_normal((batch, d)) + 1j * rng.standard_normal((batch, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        v = z
        for _ in range(ell - 1):
            v = np.einsum("bi,bj->bij", v, z).reshape(batch, -1)
        acc += v.T @ v.conj()
        done += batch
    return DensityMatrix(acc / samples)


# ------------------------------------------------------------------ exact twirl


def _gram(d: int, ell: int) -> np.ndarray:
    perms = all_perms(ell)
    k = len(perms)
    g = np.empty((k, k), dtype=np.float64)
    for i, p in enumerate(perms):
        pinv = perm_inverse(p)
        for j, q in enumerate(perms):
            g[i, j] = float(d) ** perm_cycles(perm_compose(pinv, q))
    return g


def _perm_data(m4: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # Tr_A[(R_sigma^dag (x) I) rho]; R^dag reindexes rows of the A register
    return np.einsum("aras->rs", m4[targets])


def _twirl_raw(mat: np.ndarray, d: int, ell: int, budget: Budget) -> np.ndarray:
    dim = mat.shape[0]
    a = d**ell
    budget.check_twirl_dim(a, "exact twirl")
    r, rem = divmod(dim, a)
    if rem:
        raise ValueError(f"state dim {dim} is not a multiple of the twirled dim {a}")
    perms = all_perms(ell)
    m4 = mat.reshape(a, r, a, r)
    data = np.array([_perm_data(m4, perm_target_indices(p, d, ell)) for p in perms])
    gpinv = np.linalg.pinv(_gram(d, ell), rcond=1e-12)
    coeffs = np.tensordot(gpinv, data, axes=([1], [0]))
    out = np.zeros((a, r, a, r), dtype=np.complex128)
    cols = np.arange(a)
    for p, c in zip(perms, coeffs):
        out[perm_target_indices(p, d, ell), :, cols, :] += c[None, :, :]
    return out.reshape(dim, dim)


def twirl_exact(rho, d: int, ell: int, budget: Budget = DEFAULT_BUDGET) -> DensityMatrix:
    """Average of (U^(x ell) (x) I) rho (.)^dag over the Haar measure on U(d).

    Parameters
    ----------
    rho : DensityMatrix or array
        State on the twirled register (dim d^ell) times an optional bystander.
    d, ell : int
        Local dimension and number of twirled copies.
    """
    return DensityMatrix(_twirl_raw(_as_mat(rho), d, ell, budget))


def twirl_mc(rho, d: int, ell: int, samples: int, seed) -> DensityMatrix:
    """Finite-sample estimate of the same average, one unitary per sample."""
    mat = _as_mat(rho)
    a = d**ell
    r = mat.shape[0] // a
    rng = as_generator(seed)
    m4 = mat.reshape(a, r, a, r)
    acc = np.zeros_like(m4)
    for _ in range(samples):
        u = random_unitary_from(rng, d)
        ul = u
        for _ in range(ell - 1):
            ul = np.kron(ul, u)
        t = np.tensordot(ul, m4, axes=([1], [0]))
        t = np.tensordot(t, ul.conj(), axes=([2], [1]))
        acc += np.moveaxis(t, 3, 2)
    return DensityMatrix((acc / samples).reshape(mat.shape))


def ensemble_twirl(unitaries, ell: int, rho) -> DensityMatrix:
    """Uniform average over a finite list of unitaries instead of the full measure."""
    mat = _as_mat(rho)
    us = [u.mat if isinstance(u, UnitaryMatrix) else np.asarray(u) for u in unitaries]
    a = us[0].shape[0] ** ell
    r = mat.shape[0] // a
    m4 = mat.reshape(a, r, a, r)
    acc = np.zeros_like(m4)
    for u in us:
        ul = u
        for _ in range(ell - 1):
            ul = np.kron(ul, u)
        t = np.tensordot(ul, m4, axes=([1], [0]))
        t = np.tensordot(t, ul.conj(), axes=([2], [1]))
        acc += np.moveaxis(t, 3, 2)
    return DensityMatrix((acc / len(us)).reshape(mat.shape))


@dataclass(frozen=True)
class TwirlSpec:
    """How to average: full measure exactly, by sampling, or over a fixed ensemble."""

    ell: int
    dim: int
    source: str = "haar-exact"
    samples: int = 10_000
    seed: SeedPath = field(default_factory=lambda: SeedPath(0))
    unitaries: tuple = ()

    def apply(self, rho, budget: Budget = DEFAULT_BUDGET) -> DensityMatrix:
        if self.source == "haar-exact":
            return twirl_exact(rho, self.dim, self.ell, budget)
        if self.source == "haar-mc":
            return twirl_mc(rho, self.dim, self.ell, self.samples, self.seed)
        if self.source == "ensemble":
            return ensemble_twirl(self.unitaries, self.ell, rho)
        raise ValueError(f"unknown twirl source {self.source!r}")


# ------------------------------------------------------------------ Choi references


def haar_choi(lam: int, ell: int, budget: Budget = DEFAULT_BUDGET) -> DensityMatrix:
    """Exact twirl of ell copies of one half of a maximally entangled register.

    The state lives on [A_1 .. A_ell | A'] with each A_i of lam qubits and the
    partner register A' of lam*ell qubits.
    """
    budget.check_qubits(2 * lam * ell, "averaged reference state")
    a = 2 ** (lam * ell)
    omega = omega_vector(a)
    rho = np.outer(omega, omega.conj())
    return DensityMatrix(_twirl_raw(rho, 2**lam, ell, budget))


def haar_isometry_choi(
    lam: int, s: int, ell: int, budget: Budget = DEFAULT_BUDGET
) -> DensityMatrix:
    """Same reference with each copy padded by s fresh zero qubits before twirling.

    Registers: [B_1 A_1 .. B_ell A_ell | A'], the twirl acting on the ell
    blocks of (s + lam) qubits.
    """
    budget.check_qubits((2 * lam + s) * ell, "averaged isometry reference state")
    a_in = 2**lam
    omega = omega_vector(a_in**ell)
    padded = np.zeros((2**s, a_in) * ell + (a_in**ell,), dtype=np.complex128)
    idx = (0, slice(None)) * ell + (slice(None),)
    padded[idx] = omega.reshape((a_in,) * ell + (a_in**ell,))
    vec = padded.reshape(-1)
    rho = np.outer(vec, vec.conj())
    return DensityMatrix(_twirl_raw(rho, 2 ** (lam + s), ell, budget))


def reference_overlap_matrix(ops, d_in: int, d_out: int, ell: int) -> np.ndarray:
    """Overlaps v_i^dag rho2 v_j against the fully averaged Choi reference.

    ops are ell-fold operators of shape (d_out^ell, d_in^ell); v_i is the
    Choi vector of ops[i] on the same registers as the averaged reference
    at copy dims d_in -> d_out. Expanding the exact twirl over pairs of
    register permutations turns every entry into at most ell!^2 traces of
    d_in^ell-sized products, so nothing on the doubled register is ever
    materialized. Exact, including the low-dimension Gram corrections.
    """
    perms = all_perms(ell)
    gpinv = np.linalg.pinv(_gram(d_out, ell), rcond=1e-12)
    r_out = [permutation_operator(p, d_out, ell) for p in perms]
    r_in = [permutation_operator(p, d_in, ell).real for p in perms]
    mats = [np.asarray(op, dtype=complex) for op in ops]
    d_big = d_in**ell
    k = len(mats)
    h = np.zeros((k, k), dtype=np.complex128)
    for i in range(k):
        for pi_idx, rp in enumerate(r_out):
            left = mats[i].conj().T @ rp
            for j in range(k):
                mid = left @ mats[j]
                # Tr[mid R_sigma^T] is an elementwise overlap with R_sigma
                h[i, j] += sum(
                    gpinv[pi_idx, si] * np.sum(mid * r_in[si])
                    for si in range(len(perms))
                )
    return h / d_big**2


def twirl_permutation_approx(rho, n: int, ell: int) -> np.ndarray:
    """Permutation-sum stand-in for the exact twirl on n-qubit registers.

    Sum over pi of 2^(-n ell) R_pi (x) Tr_A[(R_pi^dag (x) I) rho]. Accurate
    once 2^n is large against ell^2; returned raw since it need not be PSD.
    """
    mat = _as_mat(rho)
    d = 2**n
    a = d**ell
    r, rem = divmod(mat.shape[0], a)
    if rem:
        raise ValueError("state dim does not factor into the permuted register")
    m4 = mat.reshape(a, r, a, r)
    out = np.zeros((a, r, a, r), dtype=np.complex128)
    cols = np.arange(a)
    for p in all_perms(ell):
        targets = perm_target_indices(p, d, ell)
        c = _perm_data(m4, targets) / a
        out[targets, :, cols, :] += c[None, :, :]
    return out.reshape(mat.shape)
