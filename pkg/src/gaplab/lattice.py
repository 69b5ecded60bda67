"""Finite-difference tridiagonal discretizations.

This is the second, independent spectral backend: three-point Laplacian on a
uniform grid with Dirichlet ends.  It backs the half-line operators used by
the edge-state trace invariant and serves as the cross-checking oracle for
the shooting code throughout the test suite.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from . import potentials
from .potentials import PotentialSpec


def fd_grid(a: float, b: float, h: float) -> np.ndarray:
    """Interior nodes of the uniform grid on [a, b] with step h.

    The span must be a multiple of h up to rounding slack; a relative
    mismatch below 1e-5 displaces the far Dirichlet wall negligibly.
    """
    n = int(round((b - a) / h))
    if abs(n * h - (b - a)) > 1e-5 * max(1.0, abs(b - a)):
        raise ValueError(f"(b - a) = {b - a} is not a multiple of h = {h}")
    if n < 2:
        raise ValueError("grid too coarse")
    return a + h * np.arange(1, n)


def fd_tridiagonal(spec: PotentialSpec, a: float, b: float, xi: float,
                   h: float):
    """Diagonal and off-diagonal of -d^2/dx^2 + V(x + xi) on [a, b], Dirichlet."""
    xs = fd_grid(a, b, h)
    diag = 2.0 / h ** 2 + potentials.evaluate(spec, xs, xi)
    off = np.full(len(xs) - 1, -1.0 / h ** 2)
    return diag, off, xs


def sturm_count(diag: np.ndarray, off_value: float, energy: float) -> int:
    """Number of eigenvalues < energy, by the Sturm sign-count of T - E.

    LDL^T pivots of a symmetric tridiagonal with constant off-diagonal;
    negative pivots count eigenvalues below the shift.
    """
    c = off_value * off_value
    count = 0
    q = 1.0
    first = True
    for d in diag:
        if first:
            q = d - energy
            first = False
        else:
            if q == 0.0:
                q = 1e-300
            q = (d - energy) - c / q
        if q < 0.0:
            count += 1
    return count


def fd_eigenvalue_count(spec: PotentialSpec, a: float, b: float, xi: float,
                        energy: float, h: float) -> int:
    diag, off, _ = fd_tridiagonal(spec, a, b, xi, h)
    return sturm_count(diag, float(off[0]), energy)


def fd_eigenvalues(spec: PotentialSpec, a: float, b: float, xi: float,
                   h: float, e_min: float, e_max: float,
                   vectors: bool = False):
    """All eigenvalues of the Dirichlet box in [e_min, e_max]."""
    diag, off, xs = fd_tridiagonal(spec, a, b, xi, h)
    if vectors:
        w, v = eigh_tridiagonal(diag, off, select="v",
                                select_range=(e_min, e_max))
        return w, v, xs
    return eigvalsh_tridiagonal(diag, off, select="v",
                                select_range=(e_min, e_max))


def fd_eigenvalues_richardson(spec: PotentialSpec, a: float, b: float,
                              xi: float, h: float, e_min: float,
                              e_max: float) -> np.ndarray:
    """Eigenvalues extrapolated from steps h and h/2 (second-order scheme)."""
    w1 = fd_eigenvalues(spec, a, b, xi, h, e_min, e_max)
    w2 = fd_eigenvalues(spec, a, b, xi, h / 2, e_min, e_max)
    out = []
    for v in w2:
        near = w1[np.abs(w1 - v) < 0.25 * max(1e-6, abs(e_max - e_min))]
        if len(near):
            v1 = near[np.argmin(np.abs(near - v))]
            out.append((4.0 * v - v1) / 3.0)
        else:
            out.append(v)
    return np.array(out)


def floquet_band_edges(spec: PotentialSpec, period: float, h: float,
                       n_bands: int) -> list[tuple[float, float]]:
    """Band intervals of a periodic potential from Bloch phases 0 and pi.

    Eigenvalues of one period with periodic boundary conditions interleave
    with the antiperiodic ones as  p0 <= A0 <= A1 <= p1 <= p2 <= A2 <= ...;
    consecutive distinct values bound the bands.  The corner-coupled matrices
    are diagonalized densely, so keep the single-period grid modest.
    """
    n = int(round(period / h))
    xs = np.arange(n) * h
    v = potentials.evaluate(spec, xs, 0.0)
    t = 1.0 / h ** 2
    m = np.zeros((n, n))
    idx = np.arange(n)
    m[idx, idx] = 2.0 * t + v
    m[idx[:-1], idx[:-1] + 1] = -t
    m[idx[:-1] + 1, idx[:-1]] = -t
    need = 2 * n_bands + 2
    edges = []
    for corner in (-t, +t):  # periodic, antiperiodic
        m[0, -1] = corner
        m[-1, 0] = corner
        w = np.linalg.eigvalsh(m)
        edges.append(np.sort(w)[:need])
    per, anti = edges
    merged = []
    # spectrum: [per0, anti0], [anti1, per1], [per2, anti2], ...
    pi_, ai = 0, 0
    take_per = True
    seq = []
    while len(seq) < 2 * n_bands:
        if take_per:
            seq.extend([per[pi_], anti[ai]])
            pi_ += 1
            ai += 1
        else:
            seq.extend([anti[ai], per[pi_]])
            ai += 1
            pi_ += 1
        take_per = not take_per
    for i in range(n_bands):
        merged.append((float(seq[2 * i]), float(seq[2 * i + 1])))
    return merged
