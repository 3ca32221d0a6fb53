"""Small keyed candidates for exercising the attack pipelines end to end.

These are deliberately weak constructions: a handful of keys, every key a
short circuit of seeded random gates with an optional oracle call threaded
through. Their output support has rank at most the key count, which is what
the threshold distinguisher latches onto.
"""
from __future__ import annotations

import numpy as np

from .linalg import random_unitary_from
from .oracles import (
    FixedGate,
    HriCall,
    OracleCall,
    OracleCircuit,
    PriCandidate,
    PruCandidate,
)
from .seeds import SeedPath


def _random_gate(seed: SeedPath, width: int) -> FixedGate:
    return FixedGate(random_unitary_from(seed.rng(), 2**width), tuple(range(width)))


def toy_pru_candidate(
    lam: int,
    n_keys: int,
    seed: SeedPath,
    c: int = 0,
    swap_calls: int = 0,
    call_n: int = 1,
) -> PruCandidate:
    width = lam + c
    if swap_calls and width < 2 * call_n + 1:
        raise ValueError(f"width {width} cannot host a swap call on n={call_n}")
    circuits = {}
    for k in range(n_keys):
        ks = seed.child("key", k)
        steps = [_random_gate(ks.child("g", 0), width)]
        for q in range(swap_calls):
            steps.append(OracleCall(call_n, tuple(range(2 * call_n + 1)), daggered=q % 2 == 1))
            steps.append(_random_gate(ks.child("g", q + 1), width))
        circuits[k] = OracleCircuit(width, tuple(steps))
    return PruCandidate(lam=lam, ancilla_c=c, circuits=circuits)


def toy_pri_candidate(
    lam: int,
    s: int,
    n_keys: int,
    seed: SeedPath,
    c: int = 0,
    swap_calls: int = 1,
    call_n: int = 1,
) -> PriCandidate:
    width = lam + s + c
    if swap_calls and width < 2 * call_n + 1:
        raise ValueError(f"width {width} cannot host a swap call on n={call_n}")
    circuits = {}
    for k in range(n_keys):
        ks = seed.child("key", k)
        steps = [_random_gate(ks.child("g", 0), width)]
        for q in range(swap_calls):
            steps.append(OracleCall(call_n, tuple(range(2 * call_n + 1)), daggered=q % 2 == 1))
            steps.append(_random_gate(ks.child("g", q + 1), width))
        circuits[k] = OracleCircuit(width, tuple(steps))
    return PriCandidate(lam=lam, stretch_s=s, ancilla_c=c, circuits=circuits)


def toy_hri_candidate(
    lam: int,
    n_keys: int,
    seed: SeedPath,
    c: int = 0,
    rot_calls: int = 0,
    call_n: int = 1,
    t_of_call: int = 1,
) -> PruCandidate:
    """Unitary candidate whose circuits may query the hidden-rotation family."""
    width = lam + c
    need = 1 + t_of_call + call_n
    if rot_calls and width < need:
        raise ValueError(f"width {width} cannot host a rotation call on {need} wires")
    circuits = {}
    for k in range(n_keys):
        ks = seed.child("key", k)
        steps = [_random_gate(ks.child("g", 0), width)]
        for q in range(rot_calls):
            steps.append(
                HriCall(call_n, m=k % 2**call_n, wires=tuple(range(need)), daggered=q % 2 == 1)
            )
            steps.append(_random_gate(ks.child("g", q + 1), width))
        circuits[k] = OracleCircuit(width, tuple(steps))
    return PruCandidate(lam=lam, ancilla_c=c, circuits=circuits)


def dirty_ancilla_candidate(lam: int, seed: SeedPath) -> PruCandidate:
    """Single-key candidate that entangles its work qubit, for validator tests."""
    width = lam + 1
    gate = random_unitary_from(seed.rng(), 2**width)
    circ = OracleCircuit(width, (FixedGate(gate, tuple(range(width))),))
    return PruCandidate(lam=lam, ancilla_c=1, circuits={0: circ})


def clean_ancilla_candidate(lam: int, seed: SeedPath) -> PruCandidate:
    """Single-key candidate acting trivially on its work qubit."""
    u = random_unitary_from(seed.rng(), 2**lam)
    gate = np.kron(u, np.eye(2))
    circ = OracleCircuit(lam + 1, (FixedGate(gate, tuple(range(lam + 1))),))
    return PruCandidate(lam=lam, ancilla_c=1, circuits={0: circ})
