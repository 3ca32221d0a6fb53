"""Block encodings and singular-value threshold measurements.

A block encoding presents a matrix M as the scaled top-left block of a
larger unitary, ancilla register leading. Density matrices get encoded
through their purification: with purifying register B and a fresh copy A' of
the system, the unitary W^dag (swap A A') W has top-left block exactly rho,
and only the purification column of W ever enters that block. The
discrimination measurement projects onto the high singular directions of an
encoded block, either exactly (ideal backend) or through a bounded
polynomial applied to the singular values (polynomial backend).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.special import erf, erfinv

from .budget import DEFAULT_BUDGET, Budget
from .linalg import (
    DensityMatrix,
    UnitaryMatrix,
    _as_mat,
    subsystem_perm_matrix,
)
from .seeds import as_generator
from . import subroutines


@dataclass(frozen=True)
class BlockEncoding:
    """(alpha, eps)-encoding of a block_dim matrix with `ancilla_qubits` ancillas.

    Exactly one backing form is set: a dense unitary, or a purification
    vector on [B (m qubits), A (n qubits)] representing the swap-trick
    unitary without materializing it.
    """

    alpha: float
    eps: float
    ancilla_qubits: int
    block_dim: int
    unitary_mat: np.ndarray | None = None
    purification: np.ndarray | None = None

    def __post_init__(self):
        if (self.unitary_mat is None) == (self.purification is None):
            raise ValueError("exactly one of unitary_mat / purification must be set")

    @classmethod
    def from_unitary(
        cls, u: UnitaryMatrix, ancilla_qubits: int, alpha: float = 1.0, eps: float = 0.0
    ) -> "BlockEncoding":
        block = u.dim >> ancilla_qubits
        return cls(alpha, eps, ancilla_qubits, block, unitary_mat=u.mat)

    def extract(self) -> np.ndarray:
        """The represented matrix: alpha times the top-left block of the unitary."""
        n = self.block_dim
        if self.unitary_mat is not None:
            return self.alpha * self.unitary_mat[:n, :n]
        psi = self.purification.reshape(-1, n)
        return self.alpha * (psi.T @ psi.conj())

    def dense(self, budget: Budget = DEFAULT_BUDGET) -> UnitaryMatrix:
        if self.unitary_mat is not None:
            return UnitaryMatrix(self.unitary_mat)
        n_q = self.block_dim.bit_length() - 1
        m_q = self.ancilla_qubits - n_q
        total = self.ancilla_qubits + n_q
        budget.check_dense_matrix(total, "block-encoding unitary")
        w = complete_to_unitary(self.purification)
        eye_a = np.eye(self.block_dim)
        swap = subsystem_perm_matrix(
            [2**m_q, self.block_dim, self.block_dim], [0, 2, 1]
        )
        v = np.kron(w.conj().T, eye_a) @ swap @ np.kron(w, eye_a)
        return UnitaryMatrix(v)


def complete_to_unitary(first_column: np.ndarray) -> np.ndarray:
    """Deterministic unitary completion of a given unit first column."""
    v = np.asarray(first_column, dtype=np.complex128)
    d = v.size
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("column to complete must be normalized")
    a = np.eye(d, dtype=np.complex128)
    a[:, 0] = v
    q, r = np.linalg.qr(a)
    q[:, 0] = q[:, 0] * r[0, 0]  # undo the QR phase so column 0 is exactly v
    return q


def purify(rho) -> UnitaryMatrix:
    """Full purifier on the doubled register; its first column purifies rho."""
    vec, _, _ = purification_vector(rho, compact=False)
    return UnitaryMatrix(complete_to_unitary(vec))


def purification_vector(rho, compact: bool = True, tau: float = 1e-12):
    """Purification of rho on [B, A], eigenvalues descending.

    With compact=True the B register is only as large as the numerical rank
    requires (at least one qubit). Returns (vector, n_qubits, m_qubits).
    """
    mat = _as_mat(rho)
    d = mat.shape[0]
    n_q = d.bit_length() - 1
    if 2**n_q != d:
        raise ValueError("purification needs a power-of-2 system dimension")
    w, v = subroutines.eigh((mat + mat.conj().T) / 2, label="purify")
    w = np.clip(w[::-1], 0.0, None)
    v = v[:, ::-1]
    if compact:
        rank = max(1, int(np.sum(w > tau * w[0])))
        m_q = max(1, (rank - 1).bit_length())
    else:
        m_q = n_q
    b = 2**m_q
    w = w[:b]
    w = w / np.sum(w)
    vec = (np.sqrt(w)[:, None] * v[:, :b].T).reshape(-1)
    return vec, n_q, m_q


def block_encode_density(purifier, n_qubits: int, m_qubits: int) -> BlockEncoding:
    """Exact (1, 0, n+m)-encoding of the density purified by `purifier`.

    `purifier` is either the purifying unitary (its first column is used) or
    the purification vector itself, laid out on [B (m), A (n)].
    """
    if isinstance(purifier, UnitaryMatrix):
        vec = purifier.mat[:, 0]
    else:
        vec = np.asarray(purifier, dtype=np.complex128).reshape(-1)
    if vec.size != 2 ** (n_qubits + m_qubits):
        raise ValueError("purifier size does not match the declared registers")
    return BlockEncoding(
        alpha=1.0,
        eps=0.0,
        ancilla_qubits=n_qubits + m_qubits,
        block_dim=2**n_qubits,
        purification=vec,
    )


def encode_density(rho, compact: bool = True) -> BlockEncoding:
    vec, n_q, m_q = purification_vector(rho, compact=compact)
    return block_encode_density(vec, n_q, m_q)


def dilation_encoding(m: np.ndarray) -> BlockEncoding:
    """One-ancilla exact encoding of an arbitrary matrix with norm at most 1."""
    m = np.asarray(m, dtype=np.complex128)
    u, s, vh = np.linalg.svd(m)
    if s.size and s[0] > 1 + 1e-9:
        raise ValueError("dilation needs spectral norm at most 1")
    c = np.sqrt(np.clip(1 - s**2, 0.0, None))
    d = m.shape[0]
    mid = np.block(
        [[np.diag(s), np.diag(c)], [np.diag(c), -np.diag(s)]]
    )
    left = np.block(
        [[u, np.zeros((d, d))], [np.zeros((d, d)), vh.conj().T]]
    )
    right = np.block(
        [[vh, np.zeros((d, d))], [np.zeros((d, d)), u.conj().T]]
    )
    return BlockEncoding.from_unitary(
        UnitaryMatrix(left @ mid @ right), ancilla_qubits=1
    )


def verify_block_encoding(be: BlockEncoding, target) -> float:
    """Spectral-norm defect between the represented block and the target."""
    return float(np.linalg.norm(be.extract() - _as_mat(target), 2))


# ------------------------------------------------------------- threshold polynomial


@dataclass(frozen=True)
class ThresholdPoly:
    """Bounded polynomial step: within eta of 0 on [0, a] and of 1 on [b, 1]."""

    a: float
    b: float
    eta: float
    coeffs: np.ndarray
    degree: int
    low_max: float
    high_min: float

    def __call__(self, x):
        t = 2.0 * np.clip(x, 0.0, 1.0) - 1.0
        return _cheb.chebval(t, self.coeffs)


def _poly_candidate(a: float, b: float, eta_target: float, degree: int) -> np.ndarray:
    mu = (a + b) / 2.0
    kappa = 2.0 * erfinv(1.0 - 2.0 * eta_target) / (b - a)

    def step(t):
        x = (t + 1.0) / 2.0
        return 0.5 * (1.0 + erf(kappa * (x - mu)))

    return _cheb.chebinterpolate(step, degree)


def _grid_check(coeffs: np.ndarray, a: float, b: float, points: int):
    # log-spaced points keep the check honest when a and b sit deep below 1
    xs = np.unique(
        np.concatenate(
            [np.linspace(0.0, 1.0, points), np.geomspace(1e-12, 1.0, points), [a, b]]
        )
    )
    vals = _cheb.chebval(2.0 * xs - 1.0, coeffs)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    # renormalize into [0, 1] with a small buffer for off-grid excursions
    pad = 1.05 * max(0.0, -lo, hi - 1.0) + 1e-15
    if pad > 0.0:
        coeffs = coeffs / (1.0 + 2.0 * pad)
        coeffs[0] += pad / (1.0 + 2.0 * pad)
        vals = _cheb.chebval(2.0 * xs - 1.0, coeffs)
    low_max = float(np.max(vals[xs <= a]))
    high_min = float(np.min(vals[xs >= b]))
    return coeffs, low_max, high_min


def threshold_poly(a: float, b: float, eta: float, points: int = 10_000) -> ThresholdPoly:
    """Adaptive-degree Chebyshev step, validated on a dense grid.

    The degree starts at 64 and doubles until the grid certifies the eta
    margins, capped by ceil(8/(b-a) * ln(4/eta)).
    """
    if not (0.0 <= a < b <= 1.0):
        raise ValueError("need 0 <= a < b <= 1")
    if not (0.0 < eta < 0.5):
        raise ValueError("need eta in (0, 1/2)")
    cap = math.ceil(8.0 / (b - a) * math.log(4.0 / eta))
    degree = min(64, cap)
    while True:
        coeffs = _poly_candidate(a, b, 0.7 * eta, degree)
        coeffs, low_max, high_min = _grid_check(coeffs, a, b, points)
        if low_max <= eta and high_min >= 1.0 - eta:
            return ThresholdPoly(a, b, eta, coeffs, degree, low_max, high_min)
        if degree >= cap:
            raise ValueError(
                f"threshold polynomial failed to certify by the degree cap {cap}"
            )
        degree = min(2 * degree, cap)


# ------------------------------------------------------------- discrimination


def sv_projector(mat: np.ndarray, theta: float) -> tuple[np.ndarray, int]:
    """Projector onto right singular vectors with singular value >= theta."""
    _, s, vh = subroutines.svd(mat, label="sv-projector")
    sel = s >= theta
    vs = vh[sel]
    return vs.conj().T @ vs, int(np.sum(sel))


@dataclass(frozen=True)
class DiscriminationResult:
    accept_prob: float
    accept: bool
    backend: str
    threshold: float
    rank_above: int
    poly_degree: int | None = None


def svd_discriminate(
    be: BlockEncoding,
    xi,
    a: float,
    b: float,
    eta: float,
    backend: str = "ideal",
    seed=0,
) -> DiscriminationResult:
    """Accept if the test state sits in the high singular directions of the block.

    On inputs promised inside the span of right singular vectors with value
    >= b the acceptance probability is >= 1 - eta; on inputs supported where
    every value is <= a it is <= eta. The ideal backend projects exactly at
    the midpoint threshold; the polynomial backend applies a bounded
    threshold polynomial to the singular values and measures its flag, so
    its acceptance is sum_i p(s_i)^2 <v_i| xi |v_i>.
    """
    m = be.extract()
    state = _as_mat(xi)
    if state.shape[0] != be.block_dim:
        raise ValueError("test state does not match the encoded block")
    theta = (a + b) / 2.0
    if backend == "ideal":
        proj, rank = sv_projector(m, theta)
        prob = float(np.clip(np.real(np.trace(proj @ state)), 0.0, 1.0))
        degree = None
    elif backend == "poly":
        poly = threshold_poly(a, b, eta / 2.0)
        _, s, vh = subroutines.svd(m, label="sv-transform")
        weights = poly(np.clip(s, 0.0, 1.0)) ** 2
        # ket of the i-th right singular vector is vh[i].conj()
        diag = np.real(np.einsum("ij,jk,ik->i", vh, state, vh.conj()))
        prob = float(np.clip(np.sum(weights * np.clip(diag, 0.0, None)), 0.0, 1.0))
        rank = int(np.sum(s >= theta))
        degree = poly.degree
    else:
        raise ValueError(f"unknown backend {backend!r}")
    accept = bool(as_generator(seed).random() < prob)
    return DiscriminationResult(prob, accept, backend, theta, rank, degree)


def tail_mass_bounds(be: BlockEncoding, rho, eps: float, p_exp: int):
    """Mass of rho on the kept singular directions of a 2^-p-accurate block.

    Returns (mass, lower) where the kept directions are the right singular
    vectors of the encoded block with value >= eps and
    lower = 1 - 2^(n-p+1) - 2^n eps for an n-qubit block.
    """
    state = _as_mat(rho)
    n = int(round(math.log2(be.block_dim)))
    proj, _ = sv_projector(be.extract(), eps)
    mass = float(np.real(np.trace(proj @ state)))
    lower = 1.0 - 2.0 ** (n - p_exp + 1) - 2.0**n * eps
    return mass, lower


def kernel_leakage_bounds(be: BlockEncoding, psi: np.ndarray, eps: float, p_exp: int):
    """Norm a kernel vector of the ideal block leaks past the eps cut.

    For psi annihilated by the target block and an encoding within 2^-p of
    it, returns (leak, cap) with leak = |Pi_{>=eps} psi| and cap = 2^-p / eps.
    """
    vec = np.asarray(psi, dtype=complex).reshape(-1)
    if vec.shape[0] != be.block_dim:
        raise ValueError("kernel vector does not match the encoded block")
    proj, _ = sv_projector(be.extract(), eps)
    leak = float(np.linalg.norm(proj @ vec))
    cap = 2.0 ** (-p_exp) / eps
    return leak, cap
