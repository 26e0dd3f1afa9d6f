"""Stokes measurements and density-matrix reconstruction for the parity qubit.

Three interferometric setups measure the even/odd analogue of the
polarization Stokes parameters:

  * the sorter gives s0 = I1 + I2 and s1 = I1 - I2;
  * the diagonal-basis analyzer gives s2 = I2 - I1;
  * adding a quarter-cycle delay gives s3 = I2 - I1.

Reconstruction is linear: rho = (s0*I + s1*Z + s2*X + s3*Y) / 2 in the
{even, odd} basis with even -> (1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import apply_circuit, build_s2_setup, build_s3_setup, build_sorter, detect
from .hilbert import NORM_CHECK_TOL, NormalizationError, PhotonState

__all__ = [
    "StokesVector",
    "QubitDensity",
    "measure_s0_s1",
    "measure_s2",
    "measure_s3",
    "stokes",
    "reconstruct",
    "fidelity",
]

_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)

CLIP_EIGENVALUE = -1e-6


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.s0, self.s1, self.s2, self.s3)


@dataclass(frozen=True, eq=False)
class QubitDensity:
    """2x2 density matrix in the {even, odd} basis.

    `clipped` marks a reconstruction whose raw eigenvalues were unphysical
    (below the clip threshold) and were projected back to the physical cone.
    """

    matrix: np.ndarray
    clipped: bool = False

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _check_normalized(state: PhotonState) -> None:
    dev = abs(state.norm_sq() - 1.0)
    if dev > NORM_CHECK_TOL:
        raise NormalizationError(f"state norm**2 deviates from 1 by {dev:.3e}")


def measure_s0_s1(state: PhotonState):
    """Run the sorter; returns (I1, I2, s0, s1) with I1 the even-port intensity."""
    _check_normalized(state)
    out = apply_circuit(build_sorter(), state)
    i1 = detect(out, "even_port")
    i2 = detect(out, "odd_port")
    return i1, i2, i1 + i2, i1 - i2


def measure_s2(state: PhotonState):
    """Diagonal-basis analyzer; returns (I1, I2, s2 = I2 - I1)."""
    _check_normalized(state)
    out = apply_circuit(build_s2_setup(), state)
    i1 = detect(out, "d1")
    i2 = detect(out, "d2")
    return i1, i2, i2 - i1


def measure_s3(state: PhotonState):
    """Circular-basis analyzer; returns (I1, I2, s3 = I2 - I1)."""
    _check_normalized(state)
    out = apply_circuit(build_s3_setup(), state)
    i1 = detect(out, "d1")
    i2 = detect(out, "d2")
    return i1, i2, i2 - i1


def stokes(state: PhotonState) -> StokesVector:
    """All four Stokes parameters from the three interferometer runs."""
    _, _, s0, s1 = measure_s0_s1(state)
    *_, s2 = measure_s2(state)
    *_, s3 = measure_s3(state)
    return StokesVector(s0, s1, s2, s3)


def reconstruct(sv: StokesVector) -> QubitDensity:
    """Linear reconstruction of the parity-qubit density matrix.

    A Stokes vector whose reconstruction has an eigenvalue below the clip
    threshold is flagged and projected onto the nearest physical state
    (negative eigenvalues zeroed, trace rescaled).
    """
    rho = 0.5 * (sv.s0 * np.eye(2, dtype=complex)
                 + sv.s1 * _SZ + sv.s2 * _SX + sv.s3 * _SY)
    evals = np.linalg.eigvalsh(rho)
    if evals.min() >= CLIP_EIGENVALUE:
        return QubitDensity(rho, clipped=False)
    w, vecs = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total > 0:
        w = w / total * np.real(np.trace(rho))
    clipped = vecs @ np.diag(w.astype(complex)) @ vecs.conj().T
    return QubitDensity(clipped, clipped=True)


def fidelity(density: QubitDensity, qubit) -> float:
    """<psi|rho|psi> for a pure parity qubit (even, odd) amplitude pair."""
    a, b = qubit
    v = np.array([a, b], dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero qubit vector")
    v = v / n
    return float(np.real(v.conj() @ density.matrix @ v))
