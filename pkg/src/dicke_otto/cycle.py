"""Steady states of the dressed master equation and the four-stroke Otto cycle."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .spectral import ModelParams, Spectrum, diagonalize, spin_raising, fock_annihilation, bare_operator

ENGINE = "Engine"
REFRIGERATOR = "Refrigerator"
HEATER = "Heater"
ACCELERATOR = "Accelerator"
DEGENERATE = "Degenerate"
REGIMES = (ENGINE, REFRIGERATOR, HEATER, ACCELERATOR, DEGENERATE)

GAP_TOL = 1e-10
POPULATION_FLOOR = 1e-16
DEGENERACY_THRESHOLD = 1e-12


class ThermodynamicsError(RuntimeError):
    """Heat/work signs outside the four allowed machine regimes."""


@dataclass(frozen=True)
class BathParams:
    """Ohmic bath: gamma(x) = pi * alpha * x * exp(-|x| / omega_co)."""

    temperature: float
    alpha: float = 0.01
    omega_co: float = 10.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.omega_co > 0:
            raise ValueError(f"omega_co must be > 0, got {self.omega_co}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")

    def spectral_density(self, gap):
        gap = np.asarray(gap, dtype=float)
        return math.pi * self.alpha * gap * np.exp(-np.abs(gap) / self.omega_co)

    def occupation(self, gap):
        """Bose-Einstein occupation n(gap) at the bath temperature."""
        gap = np.asarray(gap, dtype=float)
        if self.temperature == 0:
            return np.zeros_like(gap)
        if math.isinf(self.temperature):
            return np.full_like(gap, np.inf)
        with np.errstate(over="ignore", divide="ignore"):
            return 1.0 / np.expm1(gap / self.temperature)


@dataclass(frozen=True)
class ThermalState:
    populations: np.ndarray
    temperature: float
    spectrum: Spectrum
    flags: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class CycleProtocol:
    """Endpoint Hamiltonians and bath temperatures of one Otto cycle.

    ``kind`` is ``"frequency"`` (omega switched between omega_c and omega_h)
    or ``"coupling"`` (lambda switched at fixed frequencies).
    """

    hot: ModelParams
    cold: ModelParams
    t_hot: float
    t_cold: float
    kind: str = "frequency"

    def __post_init__(self):
        if self.kind not in ("frequency", "coupling"):
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if not self.t_cold > 0:
            raise ValueError(f"t_cold must be > 0, got {self.t_cold}")
        if not self.t_hot >= self.t_cold:
            raise ValueError(f"t_hot ({self.t_hot}) must be >= t_cold ({self.t_cold})")
        if self.hot.dim != self.cold.dim:
            raise ValueError("hot and cold Hamiltonians must share the Hilbert dimension")


def frequency_protocol(
    lam: float,
    n_qubits: int,
    omega_h: float = 2.0,
    omega_c: float = 1.0,
    t_hot: float = 0.5,
    t_cold: float = 0.1,
    n_tr: int = 50,
    lambda_mode: str = "absolute",
) -> CycleProtocol:
    """Resonant frequency-switching cycle (omega0 = delta = omega on each side).

    ``lambda_mode="absolute"`` keeps the same coupling on both sides;
    ``"ratio"`` scales it with the frequency so lam/omega is fixed and
    ``lam`` is read in units of omega_c.
    """
    if not omega_h > 0 or not omega_c > 0:
        raise ValueError("frequencies must be positive")
    if lambda_mode == "absolute":
        lam_h = lam_c = lam
    elif lambda_mode == "ratio":
        lam_h, lam_c = lam * omega_h / omega_c, lam
    else:
        raise ValueError(f"unknown lambda_mode {lambda_mode!r}")
    hot = ModelParams(omega_h, omega_h, lam_h, n_qubits, n_tr)
    cold = ModelParams(omega_c, omega_c, lam_c, n_qubits, n_tr)
    return CycleProtocol(hot, cold, t_hot, t_cold, "frequency")


def coupling_protocol(
    lam_h: float,
    lam_c: float,
    n_qubits: int,
    omega: float = 1.0,
    t_hot: float = 0.5,
    t_cold: float = 0.1,
    n_tr: int = 50,
) -> CycleProtocol:
    hot = ModelParams(omega, omega, lam_h, n_qubits, n_tr)
    cold = ModelParams(omega, omega, lam_c, n_qubits, n_tr)
    return CycleProtocol(hot, cold, t_hot, t_cold, "coupling")


@dataclass(frozen=True)
class CycleResult:
    q_hot: float
    q_cold: float
    work: float
    regime: str
    t_hot: float
    t_cold: float
    eta: Optional[float] = None
    cop: Optional[float] = None
    flags: frozenset = field(default_factory=frozenset)

    @property
    def carnot_eta(self) -> float:
        return 1.0 - self.t_cold / self.t_hot

    @property
    def carnot_cop(self) -> float:
        if self.t_hot == self.t_cold:
            return math.inf
        return self.t_cold / (self.t_hot - self.t_cold)


# ---------------------------------------------------------------------------
# rates and steady states


def coupling_matrices(spec: Spectrum):
    """System-bath matrix elements in the eigenbasis.

    Returns ``(S_q, S_c)`` with ``S_q = <j|(J+ + J-)|k> / sqrt(N)`` and
    ``S_c = <j|(a^+ + a)|k>``.
    """
    if spec.vectors is None:
        raise ValueError("spectrum carries no eigenvectors; diagonalize with vectors=True")
    v = spec.vectors
    n_q = spec.n_qubits
    jp = spin_raising(n_q)
    a = fock_annihilation(spec.n_fock)
    xq = bare_operator(None, jp + jp.T, spec.n_fock, n_q) / math.sqrt(n_q)
    xc = bare_operator(a + a.T, None, spec.n_fock, n_q)
    return v.T @ xq @ v, v.T @ xc @ v


def transition_rates(spec: Spectrum, bath: BathParams) -> np.ndarray:
    """Pauli rate matrix ``R[f, i]`` = rate of jumps from eigenstate i to f.

    Both channels (qubits and cavity) see the same bath.  For a pair with
    ``E_j > E_k`` the downward rate is ``Gamma (1 + n)`` and the upward one
    ``Gamma n`` with ``Gamma = gamma(E_j - E_k) |S^{jk}|^2``.  Degenerate
    pairs do not exchange population (gamma(0) = 0).
    """
    s_q, s_c = coupling_matrices(spec)
    e = spec.energies
    gap = e[:, None] - e[None, :]  # gap[j, k] = E_j - E_k
    scale = max(1.0, float(np.max(np.abs(e))))
    upper = gap > GAP_TOL * scale
    strength = np.where(upper, bath.spectral_density(np.where(upper, gap, 0.0)), 0.0)
    gamma = strength * (s_q**2 + s_c**2)
    nbar = np.where(upper, bath.occupation(np.where(upper, gap, 1.0)), 0.0)

    rates = np.zeros_like(gap)
    # gamma[j, k] (j above k): down j -> k lands in rates[k, j]; up k -> j in rates[j, k]
    rates += (gamma * (1.0 + nbar)).T
    rates += gamma * nbar
    return rates


def gibbs_populations(energies: np.ndarray, temperature: float):
    """Return (populations, flags) for the canonical ensemble."""
    e = np.asarray(energies, dtype=float)
    flags = set()
    if math.isinf(temperature):
        return np.full(len(e), 1.0 / len(e)), flags
    if temperature == 0:
        scale = max(1.0, float(np.max(np.abs(e))))
        ground = np.abs(e - e.min()) < 1e-8 * scale
        if ground.sum() > 1:
            flags.add("degenerate_ground")
        return ground / ground.sum(), flags
    w = np.exp(-(e - e.min()) / temperature)
    return w / w.sum(), flags


def _null_space_populations(rates: np.ndarray) -> np.ndarray:
    gen = rates - np.diag(rates.sum(axis=0))
    # replace the most populated balance equation by the normalization
    a = gen.copy()
    b = np.zeros(len(a))
    a[0, :] = 1.0
    b[0] = 1.0
    p = np.linalg.solve(a, b)
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def steady_state(spec: Spectrum, bath: BathParams, method: str = "gibbs") -> ThermalState:
    """Steady-state populations of the dressed master equation.

    ``method="gibbs"`` returns the canonical distribution directly, which is
    the steady state whenever the rate graph is connected.  ``method="rates"``
    solves the Pauli rate equation for its null vector instead.
    """
    t = bath.temperature
    if method == "gibbs" or t == 0 or math.isinf(t):
        p, flags = gibbs_populations(spec.energies, t)
        return ThermalState(p, t, spec, frozenset(flags))
    if method != "rates":
        raise ValueError(f"unknown steady-state method {method!r}")

    rates = transition_rates(spec, bath)
    bare = rates + rates.T
    n_comp, _ = connected_components(bare > 0, directed=False)
    if n_comp > 1:
        warnings.warn(f"rate graph has {n_comp} components; falling back to Gibbs populations")
        p, flags = gibbs_populations(spec.energies, t)
        flags.add("disconnected")
        return ThermalState(p, t, spec, frozenset(flags))
    return ThermalState(_null_space_populations(rates), t, spec, frozenset())


# ---------------------------------------------------------------------------
# the Otto cycle


def classify(q_hot: float, q_cold: float, work: float, threshold: float = DEGENERACY_THRESHOLD) -> str:
    if max(abs(q_hot), abs(q_cold), abs(work)) < threshold:
        return DEGENERATE
    if work > 0:
        if q_hot > 0 and q_cold < 0:
            return ENGINE
    else:
        if q_cold > 0 and q_hot < 0:
            return REFRIGERATOR
        if q_cold < 0 and q_hot < 0:
            return HEATER
        if q_cold < 0 and q_hot > 0:
            return ACCELERATOR
    raise ThermodynamicsError(
        f"sign pattern Q_h={q_hot:.3e}, Q_c={q_cold:.3e}, W={work:.3e} matches no regime"
    )


def cycle_from_energies(
    e_hot: np.ndarray,
    e_cold: np.ndarray,
    t_hot: float,
    t_cold: float,
    floor: float = POPULATION_FLOOR,
    threshold: float = DEGENERACY_THRESHOLD,
) -> CycleResult:
    """Heat and work for levels paired by ascending index across the strokes."""
    e_hot = np.asarray(e_hot, dtype=float)
    e_cold = np.asarray(e_cold, dtype=float)
    if e_hot.shape != e_cold.shape:
        raise ValueError("hot and cold spectra must have the same number of levels")
    p_hot, _ = gibbs_populations(e_hot, t_hot)
    p_cold, _ = gibbs_populations(e_cold, t_cold)
    keep = np.maximum(p_hot, p_cold) >= floor
    dp = np.where(keep, p_hot - p_cold, 0.0)
    # sum(dp) = 0, so shifting by the ground energy leaves Q unchanged but
    # avoids cancellation against large negative offsets
    q_hot = float(np.sum((e_hot - e_hot[0]) * dp))
    q_cold = float(np.sum((e_cold - e_cold[0]) * -dp))
    work = q_hot + q_cold

    regime = classify(q_hot, q_cold, work, threshold)
    eta = work / q_hot if regime == ENGINE else None
    cop = q_cold / abs(work) if regime == REFRIGERATOR else None
    return CycleResult(q_hot, q_cold, work, regime, t_hot, t_cold, eta, cop)


def endpoint_spectra(proto: CycleProtocol, method: str = "ecs"):
    hot = diagonalize(proto.hot, method, vectors=False)
    cold = diagonalize(proto.cold, method, vectors=False)
    return hot, cold


def run_cycle(proto: CycleProtocol, method: str = "ecs", spectra=None) -> CycleResult:
    """Evaluate one Otto cycle.

    ``spectra`` may supply precomputed ``(hot, cold)`` spectra, e.g. when
    sweeping temperatures at fixed Hamiltonians.
    """
    hot, cold = spectra if spectra is not None else endpoint_spectra(proto, method)
    res = cycle_from_energies(hot.energies, cold.energies, proto.t_hot, proto.t_cold)
    near = set(hot.near_degenerate) | set(cold.near_degenerate)
    if near:
        res = CycleResult(**{**res.__dict__, "flags": frozenset({"near_degenerate_levels"})})
    return res


def pwc_threshold(omega_h: float, omega_c: float, t_cold: float) -> float:
    """Smallest hot temperature giving positive work for a harmonic ladder."""
    if not omega_h >= omega_c > 0:
        raise ValueError("need omega_h >= omega_c > 0")
    return omega_h / omega_c * t_cold


def eta_decoupled(omega_h: float, omega_c: float) -> float:
    return 1.0 - omega_c / omega_h


def cop_decoupled(omega_h: float, omega_c: float) -> float:
    return omega_c / (omega_h - omega_c)
