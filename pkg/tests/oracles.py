"""Independent reference constructions used only by the tests.

Nothing here imports the package's Hamiltonian builders; each oracle is
assembled from textbook operators with explicit Kronecker products.
"""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as la


def destroy(n):
    a = np.zeros((n, n))
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return a


def collective_spin(n_qubits):
    """(Jz, J+) on the symmetric subspace, m ascending, via explicit ladder."""
    j = Fraction(n_qubits, 2)
    dim = n_qubits + 1
    jz = np.zeros((dim, dim))
    jp = np.zeros((dim, dim))
    for i in range(dim):
        m = -j + i
        jz[i, i] = float(m)
        if i + 1 < dim:
            jp[i + 1, i] = math.sqrt(float(j * (j + 1) - m * (m + 1)))
    return jz, jp


def dicke_kron(omega0, delta, lam, n_qubits, n_tr):
    a = destroy(n_tr + 1)
    jz, jp = collective_spin(n_qubits)
    jx = (jp + jp.T) / 2
    i_f, i_s = np.eye(n_tr + 1), np.eye(n_qubits + 1)
    return (
        omega0 * np.kron(a.T @ a, i_s)
        + delta * np.kron(i_f, jz)
        + 2 * lam / math.sqrt(n_qubits) * np.kron(a + a.T, jx)
    )


def rabi_hamiltonian(omega0, delta, lam, n_tr):
    """omega a^+a + (delta/2) sigma_z + lam (a + a^+) sigma_x, spin-down first."""
    sz = np.diag([-1.0, 1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    a = destroy(n_tr + 1)
    return (
        omega0 * np.kron(a.T @ a, np.eye(2))
        + delta / 2 * np.kron(np.eye(n_tr + 1), sz)
        + lam * np.kron(a + a.T, sx)
    )


def rabi_energies(omega0, delta, lam, n_tr):
    return np.linalg.eigvalsh(rabi_hamiltonian(omega0, delta, lam, n_tr))


@lru_cache(maxsize=None)
def bare_reference_energies(n_qubits, lam, n_tr=None):
    """Well-converged bare-basis energies from the kron oracle."""
    if n_tr is None:
        n_tr = int(80 + 3 * n_qubits * lam**2 + 30 * lam)
    return np.linalg.eigvalsh(dicke_kron(1.0, 1.0, lam, n_qubits, n_tr))


def displaced_overlap_exact(alpha: Fraction, l: int, k: int) -> float:
    """<l|D(alpha)|k> with the polynomial part summed in exact rationals."""
    s = Fraction(0)
    for r in range(min(l, k) + 1):
        s += (
            alpha ** (l - r) * (-alpha) ** (k - r)
            / (math.factorial(l - r) * math.factorial(k - r) * math.factorial(r))
        )
    return float(s) * math.sqrt(math.factorial(l) * math.factorial(k)) * math.exp(-float(alpha) ** 2 / 2)


def gibbs_matrix(h, temperature):
    e0 = np.linalg.eigvalsh(h)[0]
    rho = la.expm(-(h - e0 * np.eye(len(h))) / temperature)
    return rho / np.trace(rho)


def thermal_photon_number(omega, temperature):
    return 1.0 / math.expm1(omega / temperature)
