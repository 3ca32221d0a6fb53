"""Oracle families and the circuits that query them.

The swap family reflects between two designated states per index: on the
block labeled m it exchanges |0>|0^n> with |1>|psi_{n,m}> and fixes the
orthogonal complement, so each block is a self-adjoint involution. The
hidden-rotation family instead flips a flag while applying a Haar unitary
on a padded register, again an involution. Family members are sampled
lazily from a SeedPath, so only queried indices ever get drawn.

Wire conventions. A swap call occupies 2n+1 wires ordered
[index m (n), flag (1), payload (n)]; flag is the most significant qubit of
the reflected block. A hidden-rotation call occupies 1 + t(n) + n wires
ordered [flag, pad, payload], with the index m carried classically on the
call. Circuits list steps top to bottom, wire 0 most significant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .budget import DEFAULT_BUDGET, Budget, SizingError
from .linalg import (
    ChannelRep,
    PureState,
    UnitaryMatrix,
    apply_on_wires,
    as_complex_array,
)
from .seeds import SeedPath
from . import haar

STRETCHES = {
    "n": lambda n: n,
    "2n": lambda n: 2 * n,
    "zero": lambda n: 0,
}


def swap_unitary(n: int, psi: PureState) -> UnitaryMatrix:
    """Reflection on n+1 qubits exchanging |0,0^n> with |1,psi>."""
    if psi.dim != 2**n:
        raise ValueError(f"target state has dim {psi.dim}, expected 2^{n}")
    d = 2 ** (n + 1)
    e0 = np.zeros(d, dtype=np.complex128)
    e0[0] = 1.0
    e1 = np.zeros(d, dtype=np.complex128)
    e1[2**n :] = psi.amplitudes
    s = np.eye(d, dtype=np.complex128)
    s -= np.outer(e0, e0.conj()) + np.outer(e1, e1.conj())
    s += np.outer(e0, e1.conj()) + np.outer(e1, e0.conj())
    return UnitaryMatrix(s)


def t_theta_unitary(theta: PureState) -> UnitaryMatrix:
    """Single reflection toward a fixed target state (the one-index family member)."""
    return swap_unitary(theta.qubits, theta)


@dataclass
class SwapOracleFamily:
    """Lazily sampled family {S_n}: block m of S_n reflects toward psi_{n,m}."""

    seed: SeedPath
    _states: dict = field(default_factory=dict, repr=False)

    def state(self, n: int, m: int) -> PureState:
        if not 0 <= m < 2**n:
            raise ValueError(f"index m={m} out of range for n={n}")
        key = (n, m)
        if key not in self._states:
            self._states[key] = haar.sample_haar_state(
                2**n, self.seed.child("n", n).child("m", m)
            )
        return self._states[key]

    def block_unitary(self, n: int, m: int) -> UnitaryMatrix:
        return swap_unitary(n, self.state(n, m))

    def dense_oracle(self, n: int, budget: Budget = DEFAULT_BUDGET) -> UnitaryMatrix:
        """Full member on 2n+1 qubits, block diagonal over the index register."""
        budget.check_dense_oracle(n)
        block = 2 ** (n + 1)
        out = np.zeros((2**n * block, 2**n * block), dtype=np.complex128)
        for m in range(2**n):
            sl = slice(m * block, (m + 1) * block)
            out[sl, sl] = self.block_unitary(n, m).mat
        return UnitaryMatrix(out)

    def manifest(self) -> dict:
        return {
            "kind": "swap",
            "seed": self.seed.describe(),
            "sampled_indices": sorted(map(list, self._states)),
        }


@dataclass
class HriOracleFamily:
    """Lazily sampled flag-flip family: block m applies a Haar unitary on t(n)+n qubits."""

    seed: SeedPath
    stretch: str = "n"
    _unitaries: dict = field(default_factory=dict, repr=False)

    def t_of(self, n: int) -> int:
        return STRETCHES[self.stretch](n)

    def haar_unitary(self, n: int, m: int) -> UnitaryMatrix:
        if not 0 <= m < 2**n:
            raise ValueError(f"index m={m} out of range for n={n}")
        key = (n, m)
        if key not in self._unitaries:
            self._unitaries[key] = haar.sample_haar_unitary(
                2 ** (n + self.t_of(n)),
                self.seed.child("hri-n", n).child("m", m),
            )
        return self._unitaries[key]

    def oracle(self, n: int, m: int, budget: Budget = DEFAULT_BUDGET) -> UnitaryMatrix:
        t = self.t_of(n)
        budget.check_dense_matrix(1 + t + n, "hidden-rotation oracle")
        return hri_unitary(t, n, self.haar_unitary(n, m))

    def manifest(self) -> dict:
        return {
            "kind": "hidden-rotation",
            "seed": self.seed.describe(),
            "stretch": self.stretch,
            "sampled_indices": sorted(map(list, self._unitaries)),
        }


def hri_unitary(t: int, n: int, u: UnitaryMatrix) -> UnitaryMatrix:
    """Self-adjoint involution on [flag, pad(t), payload(n)].

    Maps |1>|0^t>|x> to |0> U |0^t x| and back, and acts as the identity on
    the subspace orthogonal to both the padded input sector and its image.
    """
    d_in = 2 ** (t + n)
    if u.dim != d_in:
        raise ValueError(f"rotation has dim {u.dim}, expected 2^{t + n}")
    p0 = np.zeros((d_in, d_in), dtype=np.complex128)
    idx = np.arange(2**n)  # pad register zero, payload free; pad most significant
    p0[idx, idx] = 1.0
    up0 = u.mat @ p0
    out = np.zeros((2 * d_in, 2 * d_in), dtype=np.complex128)
    out[:d_in, :d_in] = np.eye(d_in) - p0
    out[:d_in, d_in:] = up0.conj().T  # P0 U^dag
    out[d_in:, :d_in] = up0
    out[d_in:, d_in:] = np.eye(d_in) - up0 @ u.mat.conj().T  # I - U P0 U^dag
    return UnitaryMatrix(out)


def apply_swap_call(
    family: SwapOracleFamily,
    vec: np.ndarray,
    n: int,
    wires,
    n_qubits: int,
    daggered: bool = False,
) -> np.ndarray:
    """Apply one family member to a state vector without materializing it.

    Each index block is a rank-2 correction of the identity, so the update
    touches two slices per block; blocks the state has no weight on are
    skipped exactly, which also keeps lazy sampling lazy. The member is an
    involution, so daggered does not change the action.
    """
    del daggered
    wires = list(wires)
    if len(wires) != 2 * n + 1:
        raise ValueError(f"swap call on n={n} needs {2 * n + 1} wires, got {len(wires)}")
    t = vec.reshape((2,) * n_qubits)
    t = np.moveaxis(t, wires, range(len(wires)))
    shape = t.shape
    b = np.ascontiguousarray(t).reshape(2**n, 2 ** (n + 1), -1)
    for m in range(2**n):
        if not np.any(b[m]):
            continue
        psi = family.state(n, m).amplitudes
        c0 = b[m, 0, :].copy()
        c1 = psi.conj() @ b[m, 2**n :, :]
        b[m, 0, :] += c1 - c0
        b[m, 2**n :, :] += np.outer(psi, c0 - c1)
    t = b.reshape(shape)
    t = np.moveaxis(t, range(len(wires)), wires)
    return np.ascontiguousarray(t).reshape(-1)


def prfsg_eval(family: SwapOracleFamily, lam: int, k: int, x: int) -> PureState:
    """Output state of the keyed generator: one query at index (k, x).

    The query register starts in |k, x>|0>|0^2lam>; the reflected block flips
    the flag and loads the family state, and the classical registers factor
    off exactly, so slicing them away is lossless.
    """
    n = 2 * lam
    if not (0 <= k < 2**lam and 0 <= x < 2**lam):
        raise ValueError("key or input out of range")
    m = (k << lam) | x
    total = 2 * n + 1
    vec = np.zeros(2**total, dtype=np.complex128)
    vec[m << (n + 1)] = 1.0  # flag 0, payload 0^n
    out = apply_swap_call(family, vec, n, list(range(total)), total)
    block = out.reshape(2**n, 2, 2**n)
    payload = block[m, 1, :]
    if abs(np.linalg.norm(payload) - 1.0) > 1e-9:
        raise AssertionError("generator query did not land in the flagged sector")
    return PureState(payload)


def pri_eval(family: HriOracleFamily, lam: int, k: int, psi: PureState) -> PureState:
    """Keyed state isometry: pad with t(lam) zeros, rotate by the key's member.

    Realized as one oracle call on [flag, pad, payload] starting with flag
    |0>; the output flag is exactly |1> and is dropped.
    """
    t = family.t_of(lam)
    if psi.dim != 2**lam:
        raise ValueError(f"input state dim {psi.dim}, expected 2^{lam}")
    total = 1 + t + lam
    vec = np.zeros(2**total, dtype=np.complex128)
    vec[: 2**lam] = psi.amplitudes  # flag 0, pad 0^t
    out = family.oracle(lam, k).mat @ vec
    half = 2 ** (t + lam)
    if np.linalg.norm(out[:half]) > 1e-9:
        raise AssertionError("rotation query left weight on the unflagged sector")
    return PureState(out[half:])


# ------------------------------------------------------------------ circuits


@dataclass(frozen=True)
class FixedGate:
    matrix: np.ndarray
    wires: tuple

    def __post_init__(self):
        m = as_complex_array(self.matrix, "gate")
        UnitaryMatrix(m)  # validation only
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if m.shape[0] != 2 ** len(self.wires):
            raise ValueError("gate size does not match its wire count")


@dataclass(frozen=True)
class OracleCall:
    n: int
    wires: tuple
    daggered: bool = False

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if len(self.wires) != 2 * self.n + 1:
            raise ValueError(f"swap call on n={self.n} needs {2 * self.n + 1} wires")


@dataclass(frozen=True)
class HriCall:
    n: int
    m: int
    wires: tuple
    daggered: bool = False

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if not 0 <= self.m < 2**self.n:
            raise ValueError(f"call index m={self.m} out of range for n={self.n}")


@dataclass(frozen=True)
class OracleCircuit:
    total_qubits: int
    steps: tuple

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        for step in self.steps:
            if not isinstance(step, (FixedGate, OracleCall, HriCall)):
                raise TypeError(f"unknown circuit step {type(step).__name__}")
            ws = step.wires
            if len(set(ws)) != len(ws) or any(w < 0 or w >= self.total_qubits for w in ws):
                raise ValueError(f"bad wires {ws} for {self.total_qubits} qubits")

    @property
    def query_count(self) -> int:
        return sum(1 for s in self.steps if not isinstance(s, FixedGate))

    def called_ns(self) -> set[int]:
        return {s.n for s in self.steps if not isinstance(s, FixedGate)}


def evaluate_circuit(
    circ: OracleCircuit,
    state: PureState,
    swap: SwapOracleFamily | None = None,
    hri: HriOracleFamily | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> PureState:
    if state.dim != 2**circ.total_qubits:
        raise ValueError("input state does not match the circuit width")
    vec = np.array(state.amplitudes)
    for step in circ.steps:
        if isinstance(step, FixedGate):
            vec = apply_on_wires(vec, step.matrix, step.wires, circ.total_qubits)
        elif isinstance(step, OracleCall):
            if swap is None:
                raise ValueError("circuit queries the swap family but none was given")
            vec = apply_swap_call(
                swap, vec, step.n, step.wires, circ.total_qubits, step.daggered
            )
        else:
            if hri is None:
                raise ValueError("circuit queries the rotation family but none was given")
            t = hri.t_of(step.n)
            if len(step.wires) != 1 + t + step.n:
                raise ValueError(
                    f"rotation call on n={step.n} needs {1 + t + step.n} wires"
                )
            gate = hri.oracle(step.n, step.m, budget).mat
            vec = apply_on_wires(vec, gate, step.wires, circ.total_qubits)
    return PureState(vec)


def circuit_unitary(
    circ: OracleCircuit,
    swap: SwapOracleFamily | None = None,
    hri: HriOracleFamily | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> UnitaryMatrix:
    budget.check_dense_matrix(circ.total_qubits, "circuit unitary")
    dim = 2**circ.total_qubits
    cols = np.empty((dim, dim), dtype=np.complex128)
    for j in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[j] = 1.0
        cols[:, j] = evaluate_circuit(
            circ, PureState(e), swap=swap, hri=hri, budget=budget
        ).amplitudes
    return UnitaryMatrix(cols)


def rewrite_surrogate(
    circ: OracleCircuit,
    d_cutoff: int,
    replacements: dict,
    mode: str = "surrogate",
) -> tuple[OracleCircuit, int]:
    """Replace small oracle calls by fixed gates and delete the large ones.

    Calls with n <= d_cutoff become FixedGate steps looked up in
    `replacements` (key n for swap calls, key (n, m) for rotation calls);
    calls with n > d_cutoff are dropped. Returns the rewritten circuit and
    how many calls were deleted.
    """
    if mode not in ("surrogate", "exact-small"):
        raise ValueError(f"unknown rewrite mode {mode!r}")
    steps = []
    deleted = 0
    for step in circ.steps:
        if isinstance(step, FixedGate):
            steps.append(step)
            continue
        if step.n > d_cutoff:
            deleted += 1
            continue
        key = step.n if isinstance(step, OracleCall) else (step.n, step.m)
        if key not in replacements:
            raise KeyError(f"{mode} rewrite is missing a gate for call {key}")
        gate = replacements[key]
        mat = gate.mat if isinstance(gate, UnitaryMatrix) else as_complex_array(gate)
        # both families are involutions, so a daggered call uses the same gate
        steps.append(FixedGate(mat, step.wires))
    return OracleCircuit(circ.total_qubits, tuple(steps)), deleted


# ------------------------------------------------------------------ candidates


@dataclass(frozen=True)
class PruCandidate:
    """Keyed unitary family on lam input qubits plus c work qubits.

    Wires: [input (lam), work (c)]; work starts and must end in |0^c>.
    """

    lam: int
    ancilla_c: int
    circuits: dict

    def __post_init__(self):
        width = self.lam + self.ancilla_c
        for k, circ in self.circuits.items():
            if circ.total_qubits != width:
                raise ValueError(f"circuit for key {k} has the wrong width")

    @property
    def keys(self) -> tuple:
        return tuple(sorted(self.circuits))

    @property
    def stretch_s(self) -> int:
        return 0

    @property
    def query_count(self) -> int:
        return max(c.query_count for c in self.circuits.values())


@dataclass(frozen=True)
class PriCandidate:
    """Keyed isometry family: lam input qubits to lam + s output qubits.

    Wires: [input (lam), pad (s), work (c)]; pad and work start in zeros,
    work must return to |0^c>, the output is the leading lam + s wires.
    """

    lam: int
    stretch_s: int
    ancilla_c: int
    circuits: dict

    def __post_init__(self):
        width = self.lam + self.stretch_s + self.ancilla_c
        for k, circ in self.circuits.items():
            if circ.total_qubits != width:
                raise ValueError(f"circuit for key {k} has the wrong width")

    @property
    def keys(self) -> tuple:
        return tuple(sorted(self.circuits))

    @property
    def query_count(self) -> int:
        return max(c.query_count for c in self.circuits.values())


def candidate_channel(
    cand,
    key,
    swap: SwapOracleFamily | None = None,
    hri: HriOracleFamily | None = None,
    budget: Budget = DEFAULT_BUDGET,
) -> ChannelRep:
    """One key's circuit as a channel from the input register to the output register."""
    u = circuit_unitary(cand.circuits[key], swap=swap, hri=hri, budget=budget)
    return ChannelRep(
        u,
        ancilla_in_qubits=cand.stretch_s + cand.ancilla_c,
        traced_out_qubits=cand.ancilla_c,
    )


def ancilla_purity_defect(
    cand,
    swap: SwapOracleFamily | None = None,
    hri: HriOracleFamily | None = None,
    trials: int = 20,
    seed: SeedPath = SeedPath(0),
) -> float:
    """Worst-case weight the work register leaks out of |0^c> over random inputs."""
    c = cand.ancilla_c
    if c == 0:
        return 0.0
    worst = 0.0
    width = cand.lam + cand.stretch_s + c
    for k in cand.keys:
        for i in range(trials):
            psi = haar.sample_haar_state(
                2**cand.lam, seed.child("purity", i).child("key", int(k))
            )
            vec = np.zeros(2**width, dtype=np.complex128)
            vec.reshape(2**cand.lam, -1)[:, 0] = psi.amplitudes
            out = evaluate_circuit(
                cand.circuits[k], PureState(vec), swap=swap, hri=hri
            ).amplitudes
            weight = np.linalg.norm(out.reshape(-1, 2**c)[:, 0]) ** 2
            worst = max(worst, 1.0 - float(weight))
    return worst
