"""Photon statistics and photon-qubit entanglement of the thermal working substance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cycle import BathParams, ThermalState, steady_state
from .spectral import ModelParams, Spectrum, bare_operator, diagonalize_bare, fock_annihilation

VACUUM_THRESHOLD = 1e-8
POPULATION_FLOOR = 1e-12
VACUUM_DOMINATED = "VacuumDominated"


class DensityMatrixError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorrelationReport:
    g2_conventional: float
    g2_generalized: float
    negativity: float
    mean_photon: float
    temperature: float
    params: Optional[ModelParams] = None
    flags: frozenset = field(default_factory=frozenset)

    @property
    def antibunched(self) -> bool:
        return self.g2_generalized < 1.0


def _floored(populations: np.ndarray, pop_floor: float) -> np.ndarray:
    p = np.where(populations >= pop_floor, populations, 0.0)
    return p / p.sum()


def thermal_density_matrix(spec: Spectrum, state: ThermalState, pop_floor: float = POPULATION_FLOOR) -> np.ndarray:
    """rho = sum_n P_n |phi_n><phi_n| in the bare product basis."""
    if spec.vectors is None:
        raise ValueError("spectrum carries no eigenvectors")
    p = _floored(state.populations, pop_floor)
    keep = p > 0
    v = spec.vectors[:, keep]
    rho = (v * p[keep]) @ v.T
    rho = (rho + rho.T) / 2

    if abs(np.trace(rho) - 1) > 1e-10:
        raise DensityMatrixError(f"trace {np.trace(rho)} deviates from 1")
    lo = np.linalg.eigvalsh(rho).min() if rho.shape[0] <= 4000 else 0.0
    if lo < -1e-10:
        raise DensityMatrixError(f"density matrix not positive semidefinite (min eigenvalue {lo:.3e})")
    return rho


def _split_dims(rho: np.ndarray, n_qubits: int):
    ns = n_qubits + 1
    if rho.shape[0] % ns:
        raise ValueError(f"dimension {rho.shape[0]} is not a multiple of {ns}")
    return rho.shape[0] // ns, ns


def photon_moments(rho: np.ndarray, n_qubits: int):
    """Return (<a^+a>, <a^+^2 a^2>) from the photon-number distribution."""
    nf, ns = _split_dims(rho, n_qubits)
    diag = np.real(np.diagonal(rho)).reshape(nf, ns).sum(axis=1)
    n = np.arange(nf)
    return float(diag @ n), float(diag @ (n * (n - 1)))


def g2_conventional(rho: np.ndarray, n_qubits: int, threshold: float = VACUUM_THRESHOLD) -> float:
    """<a^+^2 a^2> / <a^+a>^2; NaN when <a^+a> is below ``threshold``."""
    mean, second = photon_moments(rho, n_qubits)
    if mean < threshold:
        return math.nan
    return second / mean**2


def _x_plus_eigen(spec: Spectrum) -> np.ndarray:
    if spec.vectors is None:
        raise ValueError("spectrum carries no eigenvectors")
    a = fock_annihilation(spec.n_fock)
    x = spec.vectors.T @ bare_operator(a + a.T, None, spec.n_fock, spec.n_qubits) @ spec.vectors
    e = spec.energies
    gap = e[None, :] - e[:, None]  # gap[j, k] = E_k - E_j
    return -1j * np.triu(gap * x, k=1)


def build_x_plus(spec: Spectrum) -> np.ndarray:
    """Dressed emission operator X+ = -i sum_{k>j} (E_k - E_j) X_jk |phi_j><phi_k|.

    Returned in the bare product basis; X- is its conjugate transpose.
    """
    v = spec.vectors
    return v @ _x_plus_eigen(spec) @ v.T


def emission_moments(spec: Spectrum, state: ThermalState, pop_floor: float = POPULATION_FLOOR):
    """Return (<X-X+>, <X-^2 X+^2>) on a state diagonal in the eigenbasis."""
    p = _floored(state.populations, pop_floor)
    y = _x_plus_eigen(spec)
    y2 = y @ y
    first = float(np.sum(p * np.sum(np.abs(y) ** 2, axis=0)))
    second = float(np.sum(p * np.sum(np.abs(y2) ** 2, axis=0)))
    return first, second


def g2_generalized(
    spec: Spectrum,
    state: ThermalState,
    threshold: float = VACUUM_THRESHOLD,
    pop_floor: float = POPULATION_FLOOR,
) -> float:
    """<X-^2 X+^2> / <X-X+>^2 on the thermal state; NaN when vacuum dominated."""
    first, second = emission_moments(spec, state, pop_floor)
    if first < threshold:
        return math.nan
    return second / first**2


def partial_transpose(rho: np.ndarray, n_qubits: int, partition: str = "field") -> np.ndarray:
    nf, ns = _split_dims(rho, n_qubits)
    r = rho.reshape(nf, ns, nf, ns)
    if partition == "field":
        r = r.transpose(2, 1, 0, 3)
    elif partition == "qubits":
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"partition must be 'field' or 'qubits', got {partition!r}")
    return r.reshape(nf * ns, nf * ns)


def negativity(rho: np.ndarray, n_qubits: int, partition: str = "field") -> float:
    """(||rho^T_A||_1 - 1) / 2 via the negative eigenvalues of the partial transpose."""
    pt = partial_transpose(rho, n_qubits, partition)
    ev = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    return float(-ev[ev < 0].sum())


def negativity_svd(rho: np.ndarray, n_qubits: int, partition: str = "field") -> float:
    pt = partial_transpose(rho, n_qubits, partition)
    return float((np.linalg.svd(pt, compute_uv=False).sum() - 1) / 2)


def converged_fock_cutoff(
    p: ModelParams, temperature: float, tol: float = 1e-6, start: int = 10, step: int = 10
) -> int:
    """Smallest n_tr (<= p.n_tr) at which <a^+a> moves by less than ``tol``."""
    bath = BathParams(temperature)
    prev = None
    n_tr = min(start, p.n_tr)
    while True:
        q = p.with_(n_tr=n_tr)
        spec = diagonalize_bare(q)
        rho = thermal_density_matrix(spec, steady_state(spec, bath))
        mean, _ = photon_moments(rho, p.n_qubits)
        if prev is not None and abs(mean - prev) < tol:
            return n_tr - step
        if n_tr >= p.n_tr:
            return p.n_tr
        prev = mean
        n_tr = min(n_tr + step, p.n_tr)


def correlate(
    p: ModelParams,
    temperature: float,
    partition: str = "field",
    pop_floor: float = POPULATION_FLOOR,
    threshold: float = VACUUM_THRESHOLD,
    spec: Optional[Spectrum] = None,
) -> CorrelationReport:
    """Thermal-equilibrium g2, G2, negativity and mean photon number."""
    spec = spec if spec is not None else diagonalize_bare(p)
    state = steady_state(spec, BathParams(temperature))
    rho = thermal_density_matrix(spec, state, pop_floor)
    mean, _ = photon_moments(rho, p.n_qubits)
    g2 = g2_conventional(rho, p.n_qubits, threshold)
    big_g2 = g2_generalized(spec, state, threshold, pop_floor)
    flags = set(state.flags)
    if math.isnan(g2) or math.isnan(big_g2):
        flags.add(VACUUM_DOMINATED)
    return CorrelationReport(
        g2, big_g2, negativity(rho, p.n_qubits, partition), mean, temperature, p, frozenset(flags)
    )
