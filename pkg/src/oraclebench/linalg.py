"""Dense linear algebra on small multi-qubit (and qudit) registers.

All state is explicit numpy arrays in the computational basis, row-major,
subsystem 0 most significant. Wrapper types validate their defining property
once at construction and are treated as immutable afterwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .budget import DEFAULT_BUDGET, Budget, SizingError
from .seeds import as_generator

ATOL_UNITARY = 1e-9
ATOL_HERMITIAN = 1e-9
ATOL_TRACE = 1e-8
ATOL_STATE_NORM = 1e-9
EIG_FLOOR = -1e-9
SUPPORT_TAU = 1e-10

# full PSD validation by eigh is quadratic in memory and cubic in time;
# above this dim the constructor falls back to cheap necessary checks
_EIG_VALIDATE_MAX_DIM = 1024

ComplexMatrix = np.ndarray


def as_complex_array(a, name: str = "array") -> np.ndarray:
    arr = np.array(a, dtype=np.complex128, copy=True)
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _qubits_of_dim(dim: int, what: str) -> int:
    q = dim.bit_length() - 1
    if dim <= 0 or 2**q != dim:
        raise ValueError(f"{what} has dim {dim}, not a power of 2")
    return q


@dataclass(frozen=True)
class PureState:
    """Normalized state vector. `dim` is arbitrary, `qubits` demands a power of 2."""

    amplitudes: np.ndarray

    def __post_init__(self):
        vec = as_complex_array(self.amplitudes, "state vector")
        if vec.ndim != 1 or vec.size == 0:
            raise ValueError("state vector must be a nonempty 1-d array")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > ATOL_STATE_NORM:
            raise ValueError(f"state vector norm {norm} deviates from 1 beyond {ATOL_STATE_NORM}")
        object.__setattr__(self, "amplitudes", _freeze(vec))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def qubits(self) -> int:
        return _qubits_of_dim(self.dim, "state")

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class UnitaryMatrix:
    """Square matrix with ||U^dag U - I||_inf <= 1e-9, checked at construction."""

    mat: np.ndarray

    def __post_init__(self):
        m = as_complex_array(self.mat, "unitary")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"unitary must be square, got shape {m.shape}")
        defect = m.conj().T @ m - np.eye(m.shape[0])
        # Frobenius upper-bounds the spectral norm, so it is a cheap accept
        if np.linalg.norm(defect) > ATOL_UNITARY:
            if np.linalg.norm(defect, 2) > ATOL_UNITARY:
                raise ValueError("matrix is not unitary within 1e-9")
        object.__setattr__(self, "mat", _freeze(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def qubits(self) -> int:
        return _qubits_of_dim(self.dim, "unitary")

    def dagger(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self.mat.conj().T)

    def apply(self, state: PureState) -> PureState:
        return PureState(self.mat @ state.amplitudes)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD (eigenvalues >= -1e-9, clipped), unit trace within 1e-8."""

    mat: np.ndarray

    def __post_init__(self):
        m = as_complex_array(self.mat, "density matrix")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > ATOL_HERMITIAN:
            raise ValueError("density matrix is not Hermitian within 1e-9")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > ATOL_TRACE:
            raise ValueError(f"density matrix trace {tr} deviates from 1 beyond {ATOL_TRACE}")
        if m.shape[0] <= _EIG_VALIDATE_MAX_DIM:
            w = np.linalg.eigvalsh(m)
            if w[0] < EIG_FLOOR:
                raise ValueError(f"density matrix has eigenvalue {w[0]} below {EIG_FLOOR}")
            if w[0] < 0.0:
                w, v = np.linalg.eigh(m)
                m = (v * np.clip(w, 0.0, None)) @ v.conj().T
        else:
            if np.min(m.diagonal().real) < EIG_FLOOR:
                raise ValueError("density matrix has a negative diagonal entry beyond tolerance")
        object.__setattr__(self, "mat", _freeze(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def qubits(self) -> int:
        return _qubits_of_dim(self.dim, "density matrix")

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))


def _as_mat(x) -> np.ndarray:
    if isinstance(x, DensityMatrix) or isinstance(x, UnitaryMatrix):
        return x.mat
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return as_complex_array(x)


@dataclass(frozen=True)
class ChannelRep:
    """Channel as a Stinespring unitary.

    Input enters on the leading register, the ancilla (initialized to |0...0>)
    is appended last, and the traced-out register is the trailing qubits of the
    output. Kraus operators are read off as slices of the unitary.
    """

    stinespring: UnitaryMatrix
    ancilla_in_qubits: int
    traced_out_qubits: int

    def __post_init__(self):
        q = self.stinespring.qubits
        if self.ancilla_in_qubits < 0 or self.traced_out_qubits < 0:
            raise ValueError("register sizes must be nonnegative")
        if self.ancilla_in_qubits > q or self.traced_out_qubits > q:
            raise ValueError("register sizes exceed the Stinespring unitary")

    @property
    def in_dim(self) -> int:
        return self.stinespring.dim >> self.ancilla_in_qubits

    @property
    def out_dim(self) -> int:
        return self.stinespring.dim >> self.traced_out_qubits

    def kraus(self) -> list[np.ndarray]:
        w = self.stinespring.mat
        d_out = self.out_dim
        d_tr = self.stinespring.dim // d_out
        d_in = self.in_dim
        d_anc = self.stinespring.dim // d_in
        w4 = w.reshape(d_out, d_tr, d_in, d_anc)
        return [np.ascontiguousarray(w4[:, j, :, 0]) for j in range(d_tr)]

    def apply(self, rho) -> DensityMatrix:
        r = _as_mat(rho)
        if r.shape[0] != self.in_dim:
            raise ValueError(f"channel input dim {self.in_dim}, state dim {r.shape[0]}")
        out = np.zeros((self.out_dim, self.out_dim), dtype=np.complex128)
        for k in self.kraus():
            kr = k @ r
            out += kr @ k.conj().T
        return DensityMatrix(out)


def tensor(*ops) -> np.ndarray:
    out = _as_mat(ops[0]) if not isinstance(ops[0], np.ndarray) else ops[0]
    for op in ops[1:]:
        nxt = op if isinstance(op, np.ndarray) else _as_mat(op)
        out = np.kron(out, nxt)
    return out


def partial_trace(mat, dims: list[int], keep: list[int]) -> np.ndarray:
    """Trace out every subsystem not listed in `keep` (kept order is ascending)."""
    m = _as_mat(mat)
    dims = [int(d) for d in dims]
    total = math.prod(dims)
    if m.shape != (total, total):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(keep))
    if any(i < 0 or i >= len(dims) for i in keep):
        raise ValueError("keep indices out of range")
    t = m.reshape(dims + dims)
    traced = [i for i in range(len(dims)) if i not in keep]
    for i in sorted(traced, reverse=True):
        half = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + half)
    d_keep = math.prod(dims[i] for i in keep) if keep else 1
    return t.reshape(d_keep, d_keep)


def permute_subsystems(mat, dims: list[int], perm: list[int]) -> np.ndarray:
    """Conjugate by the register reordering where new slot j holds old subsystem perm[j]."""
    m = _as_mat(mat)
    k = len(dims)
    if sorted(perm) != list(range(k)):
        raise ValueError("perm must be a permutation of the subsystem indices")
    t = m.reshape(list(dims) + list(dims))
    axes = list(perm) + [k + p for p in perm]
    new_dims = math.prod(dims)
    return np.ascontiguousarray(t.transpose(axes).reshape(new_dims, new_dims))


def subsystem_perm_matrix(dims: list[int], perm: list[int]) -> np.ndarray:
    """Permutation matrix P with P |x_0 x_1 ...> = |x_perm[0] x_perm[1] ...>."""
    k = len(dims)
    if sorted(perm) != list(range(k)):
        raise ValueError("perm must be a permutation of the subsystem indices")
    total = math.prod(dims)
    idx = np.arange(total)
    digits = []
    rem = idx
    for d in reversed(dims):
        digits.append(rem % d)
        rem = rem // d
    digits = digits[::-1]
    new_dims = [dims[p] for p in perm]
    new_idx = np.zeros(total, dtype=np.int64)
    for j, p in enumerate(perm):
        new_idx = new_idx * new_dims[j] + digits[p]
    mat = np.zeros((total, total), dtype=np.complex128)
    mat[new_idx, idx] = 1.0
    return mat


def apply_on_wires(vec: np.ndarray, gate: np.ndarray, wires, n_qubits: int) -> np.ndarray:
    """Apply a 2^k x 2^k gate to the listed qubit wires of an n-qubit state vector."""
    wires = list(wires)
    k = len(wires)
    if gate.shape != (2**k, 2**k):
        raise ValueError(f"gate shape {gate.shape} does not match {k} wires")
    if len(set(wires)) != k or any(w < 0 or w >= n_qubits for w in wires):
        raise ValueError(f"bad wire list {wires} for {n_qubits} qubits")
    t = vec.reshape((2,) * n_qubits)
    t = np.moveaxis(t, wires, range(k))
    t = gate @ t.reshape(2**k, -1)
    t = np.moveaxis(t.reshape((2,) * n_qubits), range(k), wires)
    return np.ascontiguousarray(t).reshape(-1)


def schatten_norm(mat, p) -> float:
    m = _as_mat(mat)
    if p == 2:
        return float(np.linalg.norm(m))
    s = np.linalg.svd(m, compute_uv=False)
    if p == 1:
        return float(np.sum(s))
    if p in (np.inf, "inf"):
        return float(s[0]) if s.size else 0.0
    p = float(p)
    if p < 1:
        raise ValueError("schatten norm needs p >= 1")
    return float(np.sum(s**p) ** (1.0 / p))


def trace_distance(a, b) -> float:
    """Half the trace norm of the difference; inputs must be Hermitian."""
    diff = _as_mat(a) - _as_mat(b)
    if np.max(np.abs(diff - diff.conj().T)) > 1e-7:
        raise ValueError("trace_distance expects Hermitian operands")
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.sum(np.abs(w)))


def omega_vector(d: int) -> np.ndarray:
    """Maximally entangled vector on a d x d bipartite register, as a flat array."""
    vec = np.zeros(d * d, dtype=np.complex128)
    vec[(d + 1) * np.arange(d)] = 1.0 / math.sqrt(d)
    return vec


def max_entangled(d: int) -> PureState:
    return PureState(omega_vector(d))


def choi_vector(a: np.ndarray) -> np.ndarray:
    """(A (x) I) applied to the maximally entangled pair on A's input dim.

    Row-major flattening of A is exactly that vector scaled by sqrt(d_in).
    """
    d_in = a.shape[1]
    return a.reshape(-1) / math.sqrt(d_in)


def transpose_identity_residual(a: np.ndarray) -> float:
    """Residual of the ricochet move for a d_out x d_in operator.

    Applying A to one half of the input-side entangled pair equals, up to
    the sqrt(d_out/d_in) weight change, applying A^T to the partner half of
    the output-side pair. Both sides are built explicitly; the return value
    is the norm of their difference and should be zero to rounding.
    """
    mat = np.asarray(a, dtype=complex)
    d_out, d_in = mat.shape
    lhs = np.kron(mat, np.eye(d_in)) @ omega_vector(d_in)
    rhs = np.kron(np.eye(d_out), mat.T) @ omega_vector(d_out)
    return float(np.linalg.norm(lhs - math.sqrt(d_out / d_in) * rhs))


def perm_compose(p, q) -> tuple[int, ...]:
    """(p o q)(i) = p(q(i))."""
    return tuple(p[q[i]] for i in range(len(p)))


def perm_inverse(p) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, pi in enumerate(p):
        inv[pi] = i
    return tuple(inv)


def perm_cycles(p) -> int:
    seen = [False] * len(p)
    count = 0
    for i in range(len(p)):
        if not seen[i]:
            count += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = p[j]
    return count


def all_perms(ell: int) -> list[tuple[int, ...]]:
    return [tuple(p) for p in permutations(range(ell))]


def perm_target_indices(pi, d: int, ell: int) -> np.ndarray:
    """Index map y(x) of the register permutation: digit j of y is digit pi^-1(j) of x."""
    if len(pi) != ell or sorted(pi) != list(range(ell)):
        raise ValueError(f"pi must be a permutation of range({ell})")
    n = d**ell
    idx = np.arange(n)
    digits = np.empty((ell, n), dtype=np.int64)
    rem = idx
    for j in range(ell - 1, -1, -1):
        digits[j] = rem % d
        rem = rem // d
    pinv = perm_inverse(tuple(pi))
    out = np.zeros(n, dtype=np.int64)
    for j in range(ell):
        out = out * d + digits[pinv[j]]
    return out


def permutation_operator(pi, d: int, ell: int) -> np.ndarray:
    """Operator permuting ell registers of dim d: |x_1 .. x_ell> -> |x_{pi^-1(1)} ..>."""
    n = d**ell
    if n > 2 * DEFAULT_BUDGET.max_twirl_dim:
        raise SizingError(f"permutation operator on dim {n} exceeds budget")
    targets = perm_target_indices(pi, d, ell)
    mat = np.zeros((n, n), dtype=np.complex128)
    mat[targets, np.arange(n)] = 1.0
    return mat


def sym_projector(d: int, ell: int) -> np.ndarray:
    """Projector onto the symmetric subspace of (C^d)^(x ell)."""
    n = d**ell
    out = np.zeros((n, n), dtype=np.complex128)
    for pi in all_perms(ell):
        out += permutation_operator(pi, d, ell)
    return out / math.factorial(ell)


def diamond_distance_unitary(u: UnitaryMatrix, v: UnitaryMatrix) -> float:
    """Exact diamond distance between two unitary conjugation channels.

    Reduces to the distance from the origin to the convex hull of the
    eigenvalues of U^dag V on the unit circle: with largest angular gap G,
    that distance is 0 when G <= pi and |cos(G/2)| otherwise.
    """
    if u.dim != v.dim:
        raise ValueError("unitaries must share a dimension")
    eig = np.linalg.eigvals(u.mat.conj().T @ v.mat)
    ang = np.sort(np.angle(eig))
    gaps = np.diff(ang)
    wrap = 2 * np.pi - (ang[-1] - ang[0])
    gap = max(float(np.max(gaps)) if gaps.size else 0.0, float(wrap))
    if gap <= np.pi:
        nu = 0.0
    else:
        nu = -math.cos(gap / 2)
    return 2.0 * math.sqrt(max(0.0, 1.0 - nu * nu))


def _kraus_of(chan) -> list[np.ndarray]:
    if isinstance(chan, UnitaryMatrix):
        return [chan.mat]
    if isinstance(chan, ChannelRep):
        return chan.kraus()
    if isinstance(chan, (list, tuple)):
        return [as_complex_array(k) for k in chan]
    raise TypeError(f"cannot interpret {type(chan).__name__} as a channel")


def diamond_distance_lb(chan_a, chan_b, trials: int = 2000, seed=0) -> float:
    """Sampled lower bound: best trace distance over random pure inputs on a doubled register."""
    ka, kb = _kraus_of(chan_a), _kraus_of(chan_b)
    d_in = ka[0].shape[1]
    if kb[0].shape[1] != d_in:
        raise ValueError("channels must share an input dimension")
    rng = as_generator(seed)
    best = 0.0
    for _ in range(trials):
        raw = rng.standard_normal((d_in, d_in)) + 1j * rng.standard_normal((d_in, d_in))
        psi = raw / np.linalg.norm(raw)
        out_a = sum(np.outer((k @ psi).reshape(-1), (k @ psi).reshape(-1).conj()) for k in ka)
        out_b = sum(np.outer((k @ psi).reshape(-1), (k @ psi).reshape(-1).conj()) for k in kb)
        # diamond distance is the full (not halved) trace norm of the best case
        best = max(best, 2.0 * trace_distance(out_a, out_b))
    return best


def support_projector(rho, tau: float = SUPPORT_TAU) -> tuple[np.ndarray, int]:
    """Projector onto eigenspaces above tau * largest eigenvalue, plus its rank."""
    m = _as_mat(rho)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    top = float(w[-1])
    if top <= 0.0:
        return np.zeros_like(m), 0
    mask = w > tau * top
    vs = v[:, mask]
    return vs @ vs.conj().T, int(mask.sum())


def gentle_residual(measure_op, rho) -> tuple[DensityMatrix, float]:
    """Post-measurement state sqrt(M) rho sqrt(M) / Tr[M rho] and its distance to rho."""
    m = _as_mat(measure_op)
    r = _as_mat(rho)
    p = float(np.real(np.trace(m @ r)))
    if p <= 1e-12:
        raise ValueError("measurement outcome has zero probability on this state")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w[0] < -1e-8 or w[-1] > 1 + 1e-8:
        raise ValueError("measurement operator must satisfy 0 <= M <= I")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    res = root @ r @ root / p
    residual = DensityMatrix(res)
    return residual, trace_distance(residual, r)


def random_unitary_from(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar unitary via Ginibre + QR with the phase convention fixed."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def random_state_from(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)
