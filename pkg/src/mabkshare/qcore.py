"""Dense complex linear algebra for a three-qubit register.

Single-qubit observables are parameterized by Bloch-sphere directions;
three-qubit operators live in a fixed 8x8 representation whose leftmost
tensor factor belongs to Alice, so basis kets read ``|abc>`` with
``a`` = Alice, ``b`` = Bob, ``c`` = Charlie.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "ATOL",
    "HERMITICITY_ATOL",
    "PSD_ATOL",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "IDENTITY_2",
    "Site",
    "ObservableDirection",
    "DensityOperator",
    "pauli_observable",
    "projector",
    "embed",
    "ghz",
    "matrices_close",
]

# Default absolute tolerance for elementwise matrix comparisons.
ATOL = 1e-12
# Looser tolerances for accumulated-roundoff checks on states.
HERMITICITY_ATOL = 1e-10
PSD_ATOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

for _mat in (PAULI_X, PAULI_Y, PAULI_Z, IDENTITY_2):
    _mat.setflags(write=False)
del _mat


class Site(IntEnum):
    """Tensor-factor index of one side of the experiment."""

    ALICE = 0
    BOB = 1
    CHARLIE = 2


@dataclass(frozen=True)
class ObservableDirection:
    """Bloch-sphere direction ``(theta, phi)`` defining the observable ``xi . sigma``.

    ``theta`` must lie in ``[0, pi]``; ``phi`` is wrapped into ``[0, 2*pi)``
    on construction, so e.g. ``-pi/2`` is stored as ``3*pi/2``.
    """

    theta: float
    phi: float

    def __post_init__(self) -> None:
        theta = float(self.theta)
        if not 0.0 <= theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {theta}")
        phi = float(self.phi) % (2.0 * np.pi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def bloch_vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)]
        )


def pauli_observable(direction: ObservableDirection) -> np.ndarray:
    """Return the 2x2 observable ``xi . sigma`` for a Bloch direction.

    The result is Hermitian, traceless, and squares to the identity.
    """
    x, y, z = direction.bloch_vector
    return x * PAULI_X + y * PAULI_Y + z * PAULI_Z


def projector(direction: ObservableDirection, outcome: int) -> np.ndarray:
    """Return the eigenprojector ``(I + outcome * xi.sigma) / 2``."""
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    return (IDENTITY_2 + outcome * pauli_observable(direction)) / 2.0


def embed(op: np.ndarray, site: Site) -> np.ndarray:
    """Embed a 2x2 operator at one tensor factor with identities elsewhere."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {op.shape}")
    factors = [IDENTITY_2, IDENTITY_2, IDENTITY_2]
    factors[Site(site)] = op
    return np.kron(np.kron(factors[0], factors[1]), factors[2])


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """An 8x8 Hermitian PSD operator, possibly unnormalized mid-pipeline.

    Construction validates Hermiticity (max deviation <= 1e-10), positive
    semidefiniteness (min eigenvalue >= -1e-10) and the trace: real within
    tolerance, at most ``1 + 1e-10``, and equal to 1 when ``normalized`` is
    set.  The zero operator is accepted when unnormalized (it arises from
    projecting onto an orthogonal outcome).
    """

    matrix: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (8, 8):
            raise ValueError(f"expected an 8x8 matrix, got shape {mat.shape}")
        herm_dev = np.abs(mat - mat.conj().T).max()
        if herm_dev > HERMITICITY_ATOL:
            raise ValueError(f"matrix is not Hermitian (deviation {herm_dev:.3e})")
        min_eig = float(np.linalg.eigvalsh(mat).min())
        if min_eig < -PSD_ATOL:
            raise ValueError(f"matrix is not PSD (min eigenvalue {min_eig:.3e})")
        tr = complex(mat.trace())
        if abs(tr.imag) > HERMITICITY_ATOL:
            raise ValueError(f"trace has imaginary part {tr.imag:.3e}")
        if tr.real > 1.0 + PSD_ATOL or tr.real < -PSD_ATOL:
            raise ValueError(f"trace {tr.real!r} outside [0, 1]")
        if self.normalized and abs(tr.real - 1.0) > PSD_ATOL:
            raise ValueError(f"normalized flag set but trace is {tr.real!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(self.matrix.trace().real)


def ghz() -> DensityOperator:
    """Return the three-qubit GHZ state ``(|000> + |111>)/sqrt(2)`` as a density operator."""
    ket = np.zeros(8, dtype=complex)
    ket[0] = ket[7] = 1.0 / np.sqrt(2.0)
    return DensityOperator(np.outer(ket, ket.conj()), normalized=True)


def matrices_close(a: np.ndarray, b: np.ndarray, atol: float = ATOL) -> bool:
    """Elementwise absolute comparison (no relative tolerance)."""
    return bool(np.allclose(a, b, rtol=0.0, atol=atol))
