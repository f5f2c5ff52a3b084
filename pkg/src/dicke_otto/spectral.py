"""Dicke Hamiltonian construction and diagonalization.

Two independent routes are provided:

* ``diagonalize_bare`` builds the Hamiltonian in the product basis
  ``|n>_Fock (x) |j, m>`` (spin index fastest) and calls a dense symmetric
  eigensolver.
* ``diagonalize_ecs`` works in the spin-rotated frame, expands the boson in
  spin-dependent displaced Fock states and converges much faster in the
  bosonic cutoff at strong coupling.  Eigenvectors are mapped back to the
  bare basis.

Holstein-Primakoff limit spectra serve as analytic oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg as la
from scipy.special import eval_genlaguerre, gammaln

DEFAULT_MAX_DIM = 20_000
DEFAULT_NTR = 50
DEGENERACY_GAP = 1e-8


class DimensionError(ValueError):
    """Requested Hilbert space exceeds the configured cap."""


class EigensolverError(RuntimeError):
    """Eigendecomposition failed or produced an invalid basis."""


@dataclass(frozen=True)
class ModelParams:
    """Physical knobs of one Dicke instance (energies in units of omega)."""

    omega0: float = 1.0
    delta: float = 1.0
    lam: float = 0.0
    n_qubits: int = 1
    n_tr: int = DEFAULT_NTR

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValueError(f"n_qubits must be a positive integer, got {self.n_qubits}")
        if int(self.n_tr) != self.n_tr or self.n_tr < 1:
            raise ValueError(f"n_tr must be an integer >= 1, got {self.n_tr}")

    @classmethod
    def resonant(cls, omega: float = 1.0, **kw) -> "ModelParams":
        return cls(omega0=omega, delta=omega, **kw)

    @property
    def resonant_flag(self) -> bool:
        return math.isclose(self.omega0, self.delta)

    @property
    def spin_dim(self) -> int:
        return self.n_qubits + 1

    @property
    def dim(self) -> int:
        return (self.n_tr + 1) * (self.n_qubits + 1)

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenpairs of one Hamiltonian instance.

    ``vectors`` columns live in the bare basis with ``n_fock`` Fock states
    (row index ``n * (N + 1) + (m + N/2)``).  For the bare route
    ``n_fock == n_tr + 1``; the ECS route may need a wider bare basis to
    hold its displaced states without loss.
    """

    energies: np.ndarray
    vectors: Optional[np.ndarray]
    params: ModelParams
    method: str
    n_fock: int
    near_degenerate: tuple = field(default=())

    @property
    def n_qubits(self) -> int:
        return self.params.n_qubits

    @property
    def n_tr(self) -> int:
        return self.params.n_tr

    def __len__(self):
        return len(self.energies)


@dataclass(frozen=True)
class HpLimitSpectrum:
    phase: str
    eps_minus: float = float("nan")
    eps_plus: float = float("nan")
    levels: Optional[np.ndarray] = None
    clamped: bool = False


# ---------------------------------------------------------------------------
# operators


def fock_annihilation(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), 1)


def spin_projections(n_qubits: int) -> np.ndarray:
    """Jz eigenvalues m = -N/2 .. N/2 in basis order."""
    return np.arange(n_qubits + 1) - n_qubits / 2


def spin_raising(n_qubits: int) -> np.ndarray:
    j = n_qubits / 2
    m = spin_projections(n_qubits)[:-1]
    jp = np.zeros((n_qubits + 1, n_qubits + 1))
    jp[np.arange(1, n_qubits + 1), np.arange(n_qubits)] = np.sqrt(j * (j + 1) - m * (m + 1))
    return jp


def spin_ops(n_qubits: int):
    """Return (Jz, Jx, Jy) for the j = N/2 Dicke manifold."""
    jp = spin_raising(n_qubits)
    jz = np.diag(spin_projections(n_qubits))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    return jz, jx, jy


def check_dim(p: ModelParams, max_dim: int = DEFAULT_MAX_DIM, n_fock: Optional[int] = None):
    n_fock = p.n_tr + 1 if n_fock is None else n_fock
    dim = n_fock * (p.n_qubits + 1)
    if dim > max_dim:
        raise DimensionError(
            f"Hilbert dimension {dim} = {n_fock} x {p.n_qubits + 1} exceeds cap {max_dim}"
        )
    return dim


def build_hamiltonian_bare(p: ModelParams, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Real-symmetric Dicke Hamiltonian in the bare product basis.

    ``H = omega0 a^+a + delta Jz + (2 lam / sqrt(N)) (a^+ + a) Jx`` with
    Fock states ``n = 0..n_tr`` and the spin index running fastest.
    """
    dim = check_dim(p, max_dim)
    ns = p.n_qubits + 1
    j = p.n_qubits / 2
    n = np.repeat(np.arange(p.n_tr + 1), ns)
    m = np.tile(spin_projections(p.n_qubits), p.n_tr + 1)

    h = np.zeros((dim, dim))
    idx = np.arange(dim)
    h[idx, idx] = p.omega0 * n + p.delta * m

    # (a^+ + a) Jx  with  Jx = (J+ + J-)/2: couples (n, m) -> (n + 1, m +- 1)
    g = 2 * p.lam / math.sqrt(p.n_qubits)
    for dm in (+1, -1):
        src = (n < p.n_tr) & (np.abs(m + dm) <= j + 1e-12)
        i = idx[src]
        mm = m[src]
        jpm = np.sqrt(j * (j + 1) - mm * (mm + dm))
        amp = g * np.sqrt(n[src] + 1) * jpm / 2
        tgt = i + ns + dm
        h[tgt, i] += amp
        h[i, tgt] += amp
    return h


def bare_operator(op_fock: Optional[np.ndarray], op_spin: Optional[np.ndarray], n_fock: int, n_qubits: int):
    """Embed a Fock and/or spin operator into the product basis."""
    a = np.eye(n_fock) if op_fock is None else op_fock
    b = np.eye(n_qubits + 1) if op_spin is None else op_spin
    return np.kron(a, b)


# ---------------------------------------------------------------------------
# eigensolver plumbing


def _eigh(h: np.ndarray, eigvals_only: bool = False):
    try:
        return la.eigh(h, eigvals_only=eigvals_only, driver="evr" if not eigvals_only else None)
    except (la.LinAlgError, ValueError) as exc:
        raise EigensolverError(
            f"dense eigensolver failed for dimension {h.shape[0]}: {exc}"
        ) from exc


def _canonicalize(energies: np.ndarray, vectors: Optional[np.ndarray]):
    """Fix eigenvector signs and order degenerate clusters deterministically."""
    scale = max(1.0, float(np.max(np.abs(energies)))) if len(energies) else 1.0
    gaps = np.diff(energies)
    near = tuple(int(i) for i in np.nonzero(gaps < DEGENERACY_GAP * scale)[0])
    if vectors is None:
        return energies, None, near

    vectors = vectors.copy()
    pivots = np.argmax(np.abs(vectors) > 1e-8 * np.max(np.abs(vectors), axis=0), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs

    if near:
        order = np.arange(len(energies))
        start = 0
        while start < len(energies):
            stop = start + 1
            while stop < len(energies) and energies[stop] - energies[stop - 1] < DEGENERACY_GAP * scale:
                stop += 1
            if stop - start > 1:
                block = np.round(vectors[:, start:stop], 10)
                keys = [tuple(-block[:, c]) for c in range(stop - start)]
                perm = sorted(range(stop - start), key=lambda c: keys[c])
                order[start:stop] = start + np.asarray(perm)
            start = stop
        vectors = vectors[:, order]
    return energies, vectors, near


def diagonalize_bare(p: ModelParams, vectors: bool = True, max_dim: int = DEFAULT_MAX_DIM) -> Spectrum:
    h = build_hamiltonian_bare(p, max_dim)
    if vectors:
        e, v = _eigh(h)
    else:
        e, v = _eigh(h, eigvals_only=True), None
    if not np.all(np.isfinite(e)):
        raise EigensolverError("non-finite eigenvalues from bare-basis solve")
    e, v, near = _canonicalize(e, v)
    return Spectrum(e, v, p, "bare", p.n_tr + 1, near)


# ---------------------------------------------------------------------------
# extended coherent states


def displaced_fock_matrix(alpha: float, n_rows: int, n_cols: int) -> np.ndarray:
    """Matrix ``M[l, k] = <l| D(alpha) |k>`` for real ``alpha``.

    Uses the associated-Laguerre form
    ``<l|D|k> = sqrt(k!/l!) alpha^(l-k) exp(-alpha^2/2) L_k^(l-k)(alpha^2)``
    (l >= k, mirrored with a sign for l < k).  The factorial prefactor is
    accumulated with log-gamma so nothing overflows for l, k in the hundreds;
    the plain factorial sum cancels catastrophically in that range.
    """
    l = np.arange(n_rows)[:, None]
    k = np.arange(n_cols)[None, :]
    if alpha == 0.0:
        return (l == k).astype(float)
    lo, hi = np.minimum(l, k), np.maximum(l, k)
    d = hi - lo
    x = alpha * alpha
    lag = eval_genlaguerre(lo, d, x)
    logmag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + d * math.log(abs(alpha)) - x / 2
    # alpha^(l-k) for l > k, (-alpha)^(k-l) for l < k
    neg = np.where(l > k, alpha < 0, alpha > 0) & (d % 2 == 1)
    with np.errstate(divide="ignore"):
        out = np.exp(np.log(np.abs(lag)) + logmag)
    return np.where(neg, -1.0, 1.0) * np.sign(lag) * out


def displaced_fock_overlap_sum(alpha: float, l: int, k: int) -> float:
    """Closed-form factorial sum for ``<l|D(alpha)|k>``; only safe for small l, k."""
    s = 0.0
    for r in range(min(l, k) + 1):
        s += (
            math.sqrt(math.factorial(l) * math.factorial(k))
            * alpha ** (l - r)
            * (-alpha) ** (k - r)
            / (math.factorial(l - r) * math.factorial(k - r) * math.factorial(r))
        )
    return math.exp(-alpha * alpha / 2) * s


def rotation_to_x(n_qubits: int) -> np.ndarray:
    """Real unitary R = exp(i pi Jy / 2) mapping Jz -> -Jx and Jx -> Jz."""
    _, _, jy = spin_ops(n_qubits)
    r = la.expm(1j * math.pi / 2 * jy)
    return np.real_if_close(r, tol=1e6).real


def build_hamiltonian_rotated(p: ModelParams, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Bare-basis matrix of ``R H R^+ = omega0 a^+a - delta Jx + (2 lam/sqrt N)(a^+ + a) Jz``."""
    check_dim(p, max_dim)
    nf = p.n_tr + 1
    a = fock_annihilation(nf)
    jz, jx, _ = spin_ops(p.n_qubits)
    return (
        p.omega0 * bare_operator(a.T @ a, None, nf, p.n_qubits)
        - p.delta * bare_operator(None, jx, nf, p.n_qubits)
        + 2 * p.lam / math.sqrt(p.n_qubits) * bare_operator(a + a.T, jz, nf, p.n_qubits)
    )


def ecs_displacements(p: ModelParams) -> np.ndarray:
    """Spin-dependent boson shifts g_m = 2 lam m / (omega0 sqrt N)."""
    return 2 * p.lam * spin_projections(p.n_qubits) / (p.omega0 * math.sqrt(p.n_qubits))


def build_hamiltonian_ecs(p: ModelParams, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Hamiltonian in the displaced basis ``|m>_rot (x) D(-g_m)|k>``.

    Row index is ``(m + N/2) * (n_tr + 1) + k`` (spin-major).
    """
    check_dim(p, max_dim)
    nk = p.n_tr + 1
    ns = p.n_qubits + 1
    j = p.n_qubits / 2
    g = ecs_displacements(p)
    big_g = 2 * p.lam / (p.omega0 * math.sqrt(p.n_qubits))
    # <l|_{A_{m+1}} |k>_{A_m} = <l| D(g_{m+1} - g_m) |k> = <l|D(G)|k>
    over = displaced_fock_matrix(big_g, nk, nk)

    h = np.zeros((ns * nk, ns * nk))
    kk = np.arange(nk)
    ms = spin_projections(p.n_qubits)
    for i, m in enumerate(ms):
        blk = slice(i * nk, (i + 1) * nk)
        h[blk, blk][kk, kk] = p.omega0 * (kk - g[i] ** 2)
        if i + 1 < ns:
            jp = math.sqrt(j * (j + 1) - m * (m + 1))
            up = slice((i + 1) * nk, (i + 2) * nk)
            coupling = -p.delta / 2 * jp * over
            h[up, blk] = coupling
            h[blk, up] = coupling.T
    return h


def _ecs_fock_width(p: ModelParams, tol: float = 1e-13) -> int:
    """Bare Fock cutoff holding every displaced state D(-g_m)|k>, k <= n_tr."""
    gmax = float(np.max(np.abs(ecs_displacements(p))))
    if gmax == 0.0:
        return p.n_tr + 1
    width = int(math.ceil((math.sqrt(p.n_tr) + gmax) ** 2 + 12 * (math.sqrt(p.n_tr) + gmax) + 20))
    while True:
        cols = displaced_fock_matrix(-gmax, width, p.n_tr + 1)
        if np.max(np.abs(1.0 - np.sum(cols * cols, axis=0))) < tol:
            return width
        width = int(width * 1.25) + 10


def diagonalize_ecs(
    p: ModelParams,
    vectors: bool = True,
    max_dim: int = DEFAULT_MAX_DIM,
    n_fock_out: Optional[int] = None,
) -> Spectrum:
    """Diagonalize via extended coherent states.

    With ``vectors=True`` the eigenvectors are expanded into a bare basis
    wide enough to hold each displaced Fock component (``n_fock_out``,
    chosen automatically) and rotated back to the original frame.
    """
    h = build_hamiltonian_ecs(p, max_dim)
    if not vectors:
        e = _eigh(h, eigvals_only=True)
        e, _, near = _canonicalize(e, None)
        return Spectrum(e, None, p, "ecs", p.n_tr + 1, near)

    e, c = _eigh(h)
    nk = p.n_tr + 1
    ns = p.n_qubits + 1
    nf = n_fock_out or _ecs_fock_width(p)
    check_dim(p, max_dim * 4, n_fock=nf)
    g = ecs_displacements(p)

    # psi_rot[n, m] = sum_k <n|D(-g_m)|k> c[m, k]
    coeffs = c.reshape(ns, nk, -1)
    rot = np.empty((nf, ns, c.shape[1]))
    for i in range(ns):
        rot[:, i, :] = displaced_fock_matrix(-g[i], nf, nk) @ coeffs[i]
    # undo the spin rotation: |psi> = R^+ |psi_rot>
    r = rotation_to_x(p.n_qubits)
    v = np.einsum("ji,njk->nik", r, rot).reshape(nf * ns, -1)

    err = np.max(np.abs(v.T @ v - np.eye(v.shape[1])))
    if err > 1e-8:
        raise EigensolverError(
            f"ECS eigenvectors lost orthonormality after back-transformation ({err:.2e}); "
            f"increase n_fock_out (currently {nf})"
        )
    e, v, near = _canonicalize(e, v)
    return Spectrum(e, v, p, "ecs", nf, near)


def diagonalize(p: ModelParams, method: str = "bare", vectors: bool = True, max_dim: int = DEFAULT_MAX_DIM) -> Spectrum:
    if method == "bare":
        return diagonalize_bare(p, vectors=vectors, max_dim=max_dim)
    if method == "ecs":
        return diagonalize_ecs(p, vectors=vectors, max_dim=max_dim)
    raise ValueError(f"unknown method {method!r} (expected 'bare' or 'ecs')")


def auto_converge(
    p: ModelParams,
    method: str = "ecs",
    n_levels: int = 30,
    rtol: float = 1e-5,
    vectors: bool = False,
    max_dim: int = DEFAULT_MAX_DIM,
) -> Spectrum:
    """Double n_tr until the lowest ``n_levels`` energies move < rtol relative."""
    prev = diagonalize(p, method, vectors=False, max_dim=max_dim)
    while True:
        q = p.with_(n_tr=2 * p.n_tr)
        try:
            cur = diagonalize(q, method, vectors=False, max_dim=max_dim)
        except DimensionError:
            warnings.warn(f"auto-converge stopped at n_tr={p.n_tr}: dimension cap reached")
            break
        k = min(n_levels, len(prev), len(cur))
        a, b = prev.energies[:k], cur.energies[:k]
        if np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)) < rtol:
            break
        p, prev = q, cur
    return diagonalize(p, method, vectors=vectors, max_dim=max_dim) if vectors else prev


# ---------------------------------------------------------------------------
# analytic limits


def critical_coupling(omega0: float, delta: float, temperature: float = 0.0) -> float:
    """Finite-temperature superradiant threshold 1/2 sqrt(omega0 delta coth(omega0 / 2T))."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0:
        coth = 1.0
    else:
        x = omega0 / (2 * temperature)
        coth = 1.0 / math.tanh(x) if x < 350 else 1.0
    return 0.5 * math.sqrt(omega0 * delta * coth)


def hp_normal_spectrum(p: ModelParams) -> HpLimitSpectrum:
    w2, d2 = p.omega0**2, p.delta**2
    root = math.sqrt((w2 - d2) ** 2 + 16 * p.lam**2 * p.omega0 * p.delta)
    lo, hi = (w2 + d2) / 2 - root / 2, (w2 + d2) / 2 + root / 2
    clamped = lo < 0
    return HpLimitSpectrum("normal", math.sqrt(max(lo, 0.0)), math.sqrt(hi), clamped=clamped)


def hp_superradiant_spectrum(p: ModelParams) -> HpLimitSpectrum:
    lc4 = critical_coupling(p.omega0, p.delta) ** 4
    a = p.omega0**2 * p.lam**4
    b = p.delta**2 * lc4
    root = math.sqrt((a - b) ** 2 + 4 * p.omega0**2 * p.delta**2 * lc4**2)
    lo, hi = (a + b - root) / (2 * lc4), (a + b + root) / (2 * lc4)
    clamped = lo < 0
    return HpLimitSpectrum("superradiant", math.sqrt(max(lo, 0.0)), math.sqrt(hi), clamped=clamped)


def hp_deep_strong_levels(p: ModelParams, m_max: int, n_max: int, normalized: bool = True) -> HpLimitSpectrum:
    """Leading deep-strong levels E[m, n] on an (m_max+1, n_max+1) grid.

    With ``normalized=True`` the coupling is the ``2 lam / sqrt(N)`` of
    ``build_hamiltonian_bare``, giving
    ``E = m 4 lam^2 / omega0 + n omega0 - N lam^2 / omega0``.
    ``normalized=False`` drops the 1/sqrt(N), i.e. a ``2 lam Jx`` coupling:
    ``E = m 4 N lam^2 / omega0 + n omega0 - N^2 lam^2 / omega0``.
    """
    n_q = p.n_qubits
    m = np.arange(m_max + 1)[:, None]
    n = np.arange(n_max + 1)[None, :]
    scale = 1 if normalized else n_q
    levels = m * 4 * scale * p.lam**2 / p.omega0 + n * p.omega0 - scale * n_q * p.lam**2 / p.omega0
    return HpLimitSpectrum("deep_strong", levels=levels)
