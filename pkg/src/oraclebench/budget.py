"""Size guards for desk-scale runs.

Every routine that allocates an exponentially sized object checks against a
Budget first and raises SizingError instead of thrashing the machine.
"""
from __future__ import annotations

from dataclasses import dataclass


class SizingError(Exception):
    """A requested object exceeds the configured size budget."""


@dataclass(frozen=True)
class Budget:
    max_total_qubits: int = 14
    max_twirl_dim: int = 4096
    max_dense_oracle_n: int = 5
    max_dense_matrix_qubits: int = 12

    def check_qubits(self, qubits: int, what: str) -> None:
        if qubits > self.max_total_qubits:
            raise SizingError(
                f"{what} needs {qubits} qubits, budget allows {self.max_total_qubits}"
            )

    def check_twirl_dim(self, dim: int, what: str) -> None:
        if dim > self.max_twirl_dim:
            raise SizingError(
                f"{what} twirls a register of dim {dim}, budget allows {self.max_twirl_dim}"
            )

    def check_dense_oracle(self, n: int) -> None:
        if n > self.max_dense_oracle_n:
            raise SizingError(
                f"dense oracle block for n={n} exceeds budget n<={self.max_dense_oracle_n}"
            )

    def check_dense_matrix(self, qubits: int, what: str) -> None:
        if qubits > self.max_dense_matrix_qubits:
            raise SizingError(
                f"{what} materializes a 2^{qubits} x 2^{qubits} matrix, "
                f"budget allows {self.max_dense_matrix_qubits} qubits"
            )


DEFAULT_BUDGET = Budget()
