"""Finite-box Dirichlet spectra, eigenvalue counting, the integrated density
of states, and spectral-gap detection.

Counting rests on oscillation theory: with theta(a) = 0, the number of box
eigenvalues at or below E equals floor(theta(b; E) / pi), because each box
eigenfunction below E contributes one pi-crossing of the phase lift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import prufer
from .potentials import PotentialSpec, WindowChain

AMBIGUITY_TOL = 1e-7
PLATEAU_STATES = 2          # boundary states a finite box may host inside a gap
EDGE_MARGIN_FRACTION = 0.01  # relative gap-edge margin for downstream labels


@dataclass(frozen=True)
class Gap:
    """Open interval (e_lower, e_upper) in the complement of the spectrum."""

    e_lower: float
    e_upper: float
    confidence: str = "confirmed"  # "confirmed" | "heuristic"
    margin_fraction: float = EDGE_MARGIN_FRACTION

    def __post_init__(self):
        if not self.e_upper > self.e_lower:
            raise ValueError("gap needs e_lower < e_upper")

    @property
    def width(self) -> float:
        return self.e_upper - self.e_lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.e_lower + self.e_upper)

    @property
    def margin(self) -> float:
        return self.margin_fraction * self.width

    def trimmed(self, margin: float | None = None) -> tuple[float, float]:
        """The gap with edge margins removed, where label formulas are safe."""
        d = self.margin if margin is None else margin
        return self.e_lower + d, self.e_upper - d


@dataclass(frozen=True)
class BoxCount:
    count: int
    theta_end: float
    ambiguous: bool


def eigenvalue_count_info(spec: PotentialSpec, a: float, b: float, xi: float,
                          energy: float, *, rtol: float = 1e-9) -> BoxCount:
    """Count with the final phase attached; flags near-eigenvalue queries.

    The count is ambiguous when theta(b) sits within AMBIGUITY_TOL of a
    multiple of pi, i.e. E is within integrator resolution of a box
    eigenvalue.
    """
    if not b > a:
        raise ValueError("need a < b")
    tr = prufer.integrate(spec, energy, xi, a, b, 0.0,
                          rtol=rtol, atol_theta=rtol * 1e-2,
                          atol_logr=rtol * 1e-2)
    theta_b = float(tr.thetas[-1])
    frac = theta_b / math.pi
    ambiguous = abs(frac - round(frac)) * math.pi < AMBIGUITY_TOL
    return BoxCount(count=int(math.floor(frac + 1e-12)), theta_end=theta_b,
                    ambiguous=ambiguous)


def eigenvalue_count(spec: PotentialSpec, a: float, b: float, xi: float,
                     energy: float, *, rtol: float = 1e-9) -> int:
    """Number of Dirichlet eigenvalues of the box [a, b] at or below energy."""
    return eigenvalue_count_info(spec, a, b, xi, energy, rtol=rtol).count


def counts_grid(spec: PotentialSpec, a: float, b: float, xi: float,
                energies, *, rtol: float = 1e-6) -> np.ndarray:
    """Vectorized eigenvalue counts for a whole energy grid (one ODE pass)."""
    th = prufer.theta_grid(spec, np.asarray(energies, dtype=float), xi,
                           a, b, 0.0, rtol=rtol, atol=rtol * 1e-2)
    return np.floor(th / math.pi + 1e-12).astype(int)


def _theta_end(spec, a, b, xi, energy, rtol):
    tr = prufer.integrate(spec, energy, xi, a, b, 0.0, rtol=rtol,
                          atol_theta=rtol * 1e-2, atol_logr=rtol * 1e-2)
    return float(tr.thetas[-1])


def dirichlet_eigenvalues(spec: PotentialSpec, a: float, b: float, xi: float,
                          e_min: float, e_max: float, *, tol: float = 1e-9,
                          rtol: float = 1e-9) -> np.ndarray:
    """All box eigenvalues in [e_min, e_max], refined to absolute tol.

    Eigenvalue m solves theta(b; E) = m*pi, with theta(b; .) strictly
    increasing, so each one is bracketed by integer jumps of the count and
    then pinned by bisection on the continuous phase.
    """
    if not (b > a and e_max > e_min):
        raise ValueError("need a < b and e_min < e_max")
    t_lo = _theta_end(spec, a, b, xi, e_min, rtol)
    t_hi = _theta_end(spec, a, b, xi, e_max, rtol)
    k_first = int(math.ceil(t_lo / math.pi - 1e-12))
    k_last = int(math.floor(t_hi / math.pi + 1e-12))
    roots = []
    for k in range(k_first, k_last + 1):
        target = k * math.pi
        lo, hi = e_min, e_max
        f_lo = t_lo - target
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            f_mid = _theta_end(spec, a, b, xi, mid, rtol) - target
            if f_mid < 0.0:
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return np.array(roots)


@dataclass(frozen=True)
class IdsResult:
    value: float
    error_estimate: float
    window_values: tuple[float, ...]
    converged: bool


def ids(spec: PotentialSpec, energy: float, chain: WindowChain | None = None,
        xi: float = 0.0, *, rtol: float = 1e-6) -> IdsResult:
    """Integrated density of states: eigenvalue count per unit length.

    Returns the last-window value; the error estimate is the spread of the
    last three window values floored at the two-boundary-state granularity
    2/|largest window|.  converged is False when that spread stopped
    decreasing.
    """
    chain = chain or WindowChain.geometric()
    values = []
    for (a, b) in chain.windows:
        n = eigenvalue_count(spec, a, b, xi, energy, rtol=rtol)
        values.append(n / (b - a))
    values = np.array(values)
    last_len = chain.lengths[-1]
    if len(values) >= 3:
        spread = float(np.ptp(values[-3:]))
    else:
        spread = float(np.ptp(values))
    err = max(spread, PLATEAU_STATES / last_len)
    converged = True
    if len(values) >= 4:
        prev = float(np.ptp(values[-4:-1]))
        converged = spread <= prev + 1e-12
    return IdsResult(value=float(values[-1]), error_estimate=err,
                     window_values=tuple(float(v) for v in values),
                     converged=converged)


def _refine_edge(spec, xi, window, e_in_gap, e_in_band, n_ref, rtol,
                 iterations=16):
    """Bisect between a gap energy and a band energy for the band edge.

    The predicate 'still in the gap' is that at most PLATEAU_STATES box
    eigenvalues separate E from the plateau reference count.
    """
    a, b = window
    lo, hi = e_in_band, e_in_gap
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        n_mid = eigenvalue_count(spec, a, b, xi, mid, rtol=rtol)
        if abs(n_mid - n_ref) <= PLATEAU_STATES:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def detect_gaps(spec: PotentialSpec, e_min: float, e_max: float, *,
                resolution: float = 0.02, chain: WindowChain | None = None,
                xi: float = 0.0, rtol: float = 1e-6, min_cells: int = 2,
                significance: float = 8.0) -> list[Gap]:
    """Locate spectral gaps by scanning for plateaus of the box counts.

    A maximal energy run over which the count on the largest window varies
    by at most PLATEAU_STATES (finite boxes host O(1) boundary eigenvalues
    inside true gaps) is a gap candidate.  A candidate only counts when the
    flanking band density would have filled the run with at least
    `significance` states, which separates true plateaus from short count
    fluctuations on windows that are too small.  Runs flat on the two
    largest windows are confirmed; edges are refined by bisection on the
    count jump.  Runs touching the scan boundary are dropped since only one
    edge is visible.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    chain = chain or WindowChain.geometric()
    w1 = chain.windows[-1]
    w2 = chain.windows[-2] if len(chain) > 1 else w1
    n_grid = max(3, int(math.ceil((e_max - e_min) / resolution)) + 1)
    energies = np.linspace(e_min, e_max, n_grid)
    c1 = counts_grid(spec, w1[0], w1[1], xi, energies, rtol=rtol)

    runs = []
    start = 0
    for i in range(1, n_grid):
        if c1[i] - c1[start] > PLATEAU_STATES:
            if i - 1 - start >= min_cells:
                runs.append((start, i - 1))
            start = i
    if n_grid - 1 - start >= min_cells:
        runs.append((start, n_grid - 1))

    flank = 3
    gaps = []
    for (i0, i1) in runs:
        if i0 == 0 or i1 == n_grid - 1:
            continue  # touches the scan boundary; edges not establishable
        j0 = max(0, i0 - flank)
        j1 = min(n_grid - 1, i1 + flank)
        left_rate = (c1[i0] - c1[j0]) / max(1, i0 - j0)
        right_rate = (c1[j1] - c1[i1]) / max(1, j1 - i1)
        expected = 0.5 * (left_rate + right_rate) * (i1 - i0)
        if expected < significance:
            continue
        m = (i0 + i1) // 2
        n_ref = int(c1[m])
        lower = _refine_edge(spec, xi, w1, energies[i0], energies[i0 - 1],
                             n_ref, rtol)
        upper = _refine_edge(spec, xi, w1, energies[i1], energies[i1 + 1],
                             n_ref, rtol)
        if not upper > lower:
            continue
        c2 = counts_grid(spec, w2[0], w2[1], xi, energies[i0:i1 + 1],
                         rtol=rtol)
        confirmed = int(c2[-1] - c2[0]) <= PLATEAU_STATES
        gaps.append(Gap(float(lower), float(upper),
                        "confirmed" if confirmed else "heuristic"))
    return gaps
