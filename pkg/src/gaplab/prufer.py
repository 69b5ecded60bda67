"""Phase-amplitude integration of (H_xi - E) psi = 0.

Writing psi = r sin(theta), psi' = r cos(theta) with theta the continuous
lift of arg(psi' + i psi) turns the eigenvalue equation into

    theta'   = cos(theta)^2 + (E - V(x + xi)) * sin(theta)^2
    (log r)' = (1 - (E - V(x + xi))) * sin(theta) * cos(theta)

Zeros of psi are exactly the upward crossings of multiples of pi by theta;
at such a crossing theta' = 1, so crossings are transversal and the lift can
never recross a multiple it has passed.  The amplitude is carried in log form
because at spectral-gap energies solutions grow or decay exponentially.

The integrator is an adaptive Cash-Karp 5(4) embedded pair.  Two twin
implementations are provided: a plain-float scalar loop used for single
trajectories (it stores the accepted nodes and supports interpolation), and
a numpy one that advances a whole grid of (E, xi) components with shared
adaptive steps, used by energy scans and spectral-flow sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import potentials
from .potentials import PotentialSpec

# Cash-Karp tableau
_C2, _C3, _C4, _C5, _C6 = 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 3 / 10, -9 / 10, 6 / 5
_A51, _A52, _A53, _A54 = -11 / 54, 5 / 2, -70 / 27, 35 / 27
_A61, _A62, _A63, _A64, _A65 = (1631 / 55296, 175 / 512, 575 / 13824,
                                44275 / 110592, 253 / 4096)
_B1, _B3, _B4, _B6 = 37 / 378, 250 / 621, 125 / 594, 512 / 1771
_E1 = 37 / 378 - 2825 / 27648
_E3 = 250 / 621 - 18575 / 48384
_E4 = 125 / 594 - 13525 / 55296
_E5 = -277 / 14336
_E6 = 512 / 1771 - 1 / 4

_MAX_DTHETA = 0.95 * math.pi / 2  # lift-continuity guard per accepted step

KAPPA_MIN = 1e-3

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11


class StiffnessError(RuntimeError):
    """Raised when the adaptive step size underflows."""


@dataclass(frozen=True)
class PruferState:
    """Point sample of a phase-amplitude trajectory."""

    theta: float
    log_amplitude: float
    x: float


@dataclass
class SolutionTrace:
    """One integrated trajectory, stored at the accepted steps.

    xs are in integration order (increasing for forward traces, decreasing for
    backward ones).  dthetas holds theta' at the nodes, which makes cubic
    Hermite interpolation of the lift cheap and accurate.
    """

    potential: PotentialSpec
    energy: float
    offset: float
    direction: str
    xs: np.ndarray
    thetas: np.ndarray
    log_amplitudes: np.ndarray
    dthetas: np.ndarray

    @property
    def states(self) -> list[PruferState]:
        return [PruferState(t, lr, x)
                for t, lr, x in zip(self.thetas, self.log_amplitudes, self.xs)]

    @property
    def x_start(self) -> float:
        return float(self.xs[0])

    @property
    def x_end(self) -> float:
        return float(self.xs[-1])

    def _ascending(self):
        if self.direction == "forward":
            return self.xs, self.thetas, self.dthetas, self.log_amplitudes
        return (self.xs[::-1], self.thetas[::-1], self.dthetas[::-1],
                self.log_amplitudes[::-1])

    def theta_at(self, x):
        """Cubic Hermite interpolation of the theta lift."""
        xs, th, dth, _ = self._ascending()
        xq = np.asarray(x, dtype=float)
        scalar = xq.ndim == 0
        xq = np.atleast_1d(xq)
        if np.any(xq < xs[0] - 1e-9) or np.any(xq > xs[-1] + 1e-9):
            raise ValueError("query outside trace range")
        xq = np.clip(xq, xs[0], xs[-1])
        i = np.clip(np.searchsorted(xs, xq, side="right") - 1, 0, len(xs) - 2)
        h = xs[i + 1] - xs[i]
        t = (xq - xs[i]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        out = (h00 * th[i] + h10 * h * dth[i]
               + h01 * th[i + 1] + h11 * h * dth[i + 1])
        return float(out[0]) if scalar else out

    def log_amplitude_at(self, x):
        xs, _, _, lr = self._ascending()
        xq = np.asarray(x, dtype=float)
        scalar = xq.ndim == 0
        out = np.interp(np.atleast_1d(xq), xs, lr)
        return float(out[0]) if scalar else out


def _theta_rhs_scalar(v_of_x, energy):
    def rhs(x, theta, _v=v_of_x, _E=energy, _sin=math.sin, _cos=math.cos):
        s = _sin(theta)
        c = _cos(theta)
        ev = _E - _v(x)
        return c * c + ev * s * s, (1.0 - ev) * s * c

    return rhs


def integrate(spec: PotentialSpec, energy: float, offset: float,
              x_start: float, x_end: float, theta_start: float, *,
              rtol: float = DEFAULT_RTOL, atol_theta: float = DEFAULT_ATOL,
              atol_logr: float = DEFAULT_ATOL,
              max_step: float = 2.0) -> SolutionTrace:
    """Integrate the phase-amplitude system from x_start to x_end.

    Works in either direction.  The returned lift is continuous by
    construction (the angle is integrated on the line, never reduced mod pi),
    and a step is rejected whenever it would move theta by more than pi/2.
    """
    if x_start == x_end:
        raise ValueError("x_start and x_end must differ")
    v = potentials.scalar_evaluator(spec, offset)
    rhs = _theta_rhs_scalar(v, energy)
    span = x_end - x_start
    sgn = 1.0 if span > 0 else -1.0
    h_min = 1e-13 * abs(span) + 1e-300

    x = x_start
    th = float(theta_start)
    lr = 0.0
    k1t, k1r = rhs(x, th)
    xs = [x]
    ths = [th]
    lrs = [lr]
    dths = [k1t]

    h = sgn * min(0.02, max_step)
    done = False
    while not done:
        if abs(h) > max_step:
            h = sgn * max_step
        if abs(h) < h_min:
            raise StiffnessError(
                f"step underflow at x={x:.6g} (E={energy}, xi={offset})")
        last = (x + h - x_end) * sgn >= 0.0
        if last:
            h = x_end - x
        k2t, k2r = rhs(x + h * _C2, th + h * _A21 * k1t)
        k3t, k3r = rhs(x + h * _C3, th + h * (_A31 * k1t + _A32 * k2t))
        k4t, k4r = rhs(x + h * _C4, th + h * (_A41 * k1t + _A42 * k2t + _A43 * k3t))
        k5t, k5r = rhs(x + h * _C5, th + h * (_A51 * k1t + _A52 * k2t
                                              + _A53 * k3t + _A54 * k4t))
        k6t, k6r = rhs(x + h * _C6, th + h * (_A61 * k1t + _A62 * k2t + _A63 * k3t
                                              + _A64 * k4t + _A65 * k5t))
        th_new = th + h * (_B1 * k1t + _B3 * k3t + _B4 * k4t + _B6 * k6t)
        lr_new = lr + h * (_B1 * k1r + _B3 * k3r + _B4 * k4r + _B6 * k6r)
        err_t = h * (_E1 * k1t + _E3 * k3t + _E4 * k4t + _E5 * k5t + _E6 * k6t)
        err_r = h * (_E1 * k1r + _E3 * k3r + _E4 * k4r + _E5 * k5r + _E6 * k6r)
        sc_t = atol_theta + rtol * max(abs(th), abs(th_new))
        sc_r = atol_logr + rtol * max(abs(lr), abs(lr_new))
        err = max(abs(err_t) / sc_t, abs(err_r) / sc_r)
        dth_step = abs(th_new - th)
        if err <= 1.0 and dth_step < _MAX_DTHETA:
            x = x_end if last else x + h
            th, lr = th_new, lr_new
            k1t, k1r = rhs(x, th)
            xs.append(x)
            ths.append(th)
            lrs.append(lr)
            dths.append(k1t)
            done = last
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if dth_step >= _MAX_DTHETA:
            fac = min(fac, 0.5)
        h *= fac

    return SolutionTrace(
        potential=spec, energy=energy, offset=offset,
        direction="forward" if sgn > 0 else "backward",
        xs=np.array(xs), thetas=np.array(ths),
        log_amplitudes=np.array(lrs), dthetas=np.array(dths))


def theta_grid(spec: PotentialSpec, energies, offsets, x_start: float,
               x_end: float, theta_start, *,
               rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
               max_step: float = 2.0, with_logr: bool = False):
    """Endpoint theta lift for a whole grid of (E, xi) components at once.

    energies, offsets and theta_start broadcast against each other; all
    components share the adaptive steps (the controller uses the worst
    component).  Returns theta(x_end) with the broadcast shape, or a
    (theta, log_r) pair when with_logr is set.
    """
    E = np.asarray(energies, dtype=float)
    xi = np.asarray(offsets, dtype=float)
    th0 = np.asarray(theta_start, dtype=float)
    shape = np.broadcast_shapes(E.shape, xi.shape, th0.shape)
    E = np.broadcast_to(E, shape)
    xi = np.broadcast_to(xi, shape)
    th = np.array(np.broadcast_to(th0, shape), dtype=float)
    lr = np.zeros(shape) if with_logr else None

    span = x_end - x_start
    if span == 0:
        raise ValueError("x_start and x_end must differ")
    sgn = 1.0 if span > 0 else -1.0
    h_min = 1e-13 * abs(span) + 1e-300

    if with_logr:
        def rhs(x, t):
            s = np.sin(t)
            c = np.cos(t)
            ev = E - potentials.evaluate(spec, x, xi)
            sc = s * c
            return c * c + ev * s * s, (1.0 - ev) * sc
    else:
        def rhs(x, t):
            s = np.sin(t)
            c = np.cos(t)
            ev = E - potentials.evaluate(spec, x, xi)
            return c * c + ev * s * s, None

    x = x_start
    h = sgn * min(0.02, max_step)
    done = False
    while not done:
        if abs(h) > max_step:
            h = sgn * max_step
        if abs(h) < h_min:
            raise StiffnessError(f"step underflow at x={x:.6g}")
        last = (x + h - x_end) * sgn >= 0.0
        if last:
            h = x_end - x
        k1t, k1r = rhs(x, th)
        k2t, k2r = rhs(x + h * _C2, th + (h * _A21) * k1t)
        k3t, k3r = rhs(x + h * _C3, th + h * (_A31 * k1t + _A32 * k2t))
        k4t, k4r = rhs(x + h * _C4, th + h * (_A41 * k1t + _A42 * k2t + _A43 * k3t))
        k5t, k5r = rhs(x + h * _C5, th + h * (_A51 * k1t + _A52 * k2t
                                              + _A53 * k3t + _A54 * k4t))
        k6t, k6r = rhs(x + h * _C6, th + h * (_A61 * k1t + _A62 * k2t + _A63 * k3t
                                              + _A64 * k4t + _A65 * k5t))
        th_new = th + h * (_B1 * k1t + _B3 * k3t + _B4 * k4t + _B6 * k6t)
        err_t = h * (_E1 * k1t + _E3 * k3t + _E4 * k4t + _E5 * k5t + _E6 * k6t)
        sc = atol + rtol * np.maximum(np.abs(th), np.abs(th_new))
        err = float(np.max(np.abs(err_t) / sc))
        dmax = float(np.max(np.abs(th_new - th)))
        if err <= 1.0 and dmax < _MAX_DTHETA:
            x = x_end if last else x + h
            if with_logr:
                lr = lr + h * (_B1 * k1r + _B3 * k3r + _B4 * k4r + _B6 * k6r)
            th = th_new
            done = last
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if dmax >= _MAX_DTHETA:
            fac = min(fac, 0.5)
        h *= fac

    if with_logr:
        return th, lr
    return th


def _seed_kappa(spec: PotentialSpec, energy, offset, x_anchor, window: float):
    """Decay-rate estimate sqrt(max(Vbar - E, kappa_min)) near x_anchor."""
    vbar = potentials.mean_value(
        spec, np.asarray(x_anchor) + np.asarray(offset),
        np.asarray(x_anchor) + window + np.asarray(offset))
    return np.sqrt(np.maximum(np.asarray(vbar) - np.asarray(energy), KAPPA_MIN))


def seed_decaying_left(spec: PotentialSpec, energy, offset, L):
    """Prufer angle of the direction decaying toward -infinity, at x = -L.

    For a locally constant potential Vbar > E the decaying solution behaves
    like exp(kappa x) with kappa = sqrt(Vbar - E), whose angle is
    atan(1/kappa).  The estimate only has to land on the correct side of the
    unstable direction: forward integration contracts the error at rate
    exp(-2 kappa (x + L)).
    """
    L_arr = np.asarray(L, dtype=float)
    w = np.minimum(10.0, L_arr / 2.0)
    kappa = _seed_kappa(spec, energy, offset, -L_arr, w)
    out = np.arctan(1.0 / kappa)
    return float(out) if out.ndim == 0 else out


def seed_decaying_right(spec: PotentialSpec, energy, offset, L):
    """Angle of the direction decaying toward +infinity, at x = +L."""
    L_arr = np.asarray(L, dtype=float)
    w = np.minimum(10.0, L_arr / 2.0)
    kappa = _seed_kappa(spec, energy, offset, L_arr - w, w)
    out = math.pi - np.arctan(1.0 / kappa)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoundaryData:
    """Boundary values of the left-decaying solution at x = 0."""

    sin_theta: float
    theta: float
    dpsi_normalized: float
    trace: SolutionTrace = field(repr=False, compare=False, default=None)


def boundary_data(spec: PotentialSpec, energy: float, offset: float, L: float,
                  *, rtol: float = 1e-10, max_step: float = 0.02,
                  keep_trace: bool = False) -> BoundaryData:
    """Integrate the left-decaying solution from -L to 0.

    Returns sin(theta(0)), whose zeros in E are the right Dirichlet values,
    the lift theta(0), and psi'(0) for psi normalized to unit L^2 norm on
    [-L, 0].  The norm integral of r^2 sin^2(theta) uses the trapezoid rule
    on the accepted nodes, hence the small max_step default.
    """
    th0 = seed_decaying_left(spec, energy, offset, L)
    tr = integrate(spec, energy, offset, -L, 0.0, th0,
                   rtol=rtol, atol_theta=rtol * 1e-2, atol_logr=rtol * 1e-2,
                   max_step=max_step)
    lr = tr.log_amplitudes
    lmax = float(np.max(lr))
    weight = np.exp(2.0 * (lr - lmax)) * np.sin(tr.thetas) ** 2
    norm2 = float(np.trapezoid(weight, tr.xs))
    theta0 = float(tr.thetas[-1])
    dpsi = math.exp(float(lr[-1]) - lmax) * math.cos(theta0) / math.sqrt(norm2)
    return BoundaryData(sin_theta=math.sin(theta0), theta=theta0,
                        dpsi_normalized=dpsi,
                        trace=tr if keep_trace else None)


def count_zeros(trace: SolutionTrace, x_from: float, x_to: float, *,
                boundary_tol: float = 1e-9) -> int:
    """Number of zeros of psi in (x_from, x_to].

    Because theta crosses each multiple of pi exactly once and upward, the
    count is the number of multiples of pi in (theta(x_from), theta(x_to)].
    boundary_tol nudges the floor so that crossings sitting on the query
    points (up to integrator accuracy) are classified consistently.
    """
    if x_to < x_from:
        raise ValueError("x_to must be >= x_from")
    if x_to == x_from:
        return 0
    ta = trace.theta_at(x_from)
    tb = trace.theta_at(x_to)
    return int(math.floor(tb / math.pi + boundary_tol)
               - math.floor(ta / math.pi + boundary_tol))


def zeros(trace: SolutionTrace, x_from: float, x_to: float, *,
          refine_tol: float = 1e-12) -> np.ndarray:
    """Locations of the zeros of psi in (x_from, x_to], polished.

    The Hermite interpolant brackets each pi-crossing; a few Newton steps
    with theta re-evaluated by short high-accuracy re-integration from the
    nearest node then push the residual to refine_tol.
    """
    xs, th, dth, _ = trace._ascending()
    lo, hi = x_from, x_to
    out = []
    ta = trace.theta_at(lo)
    tb = trace.theta_at(hi)
    k_first = int(math.floor(ta / math.pi + 1e-9)) + 1
    k_last = int(math.floor(tb / math.pi + 1e-9))
    v = potentials.scalar_evaluator(trace.potential, trace.offset)
    rhs = _theta_rhs_scalar(v, trace.energy)

    def theta_exact(xq):
        j = int(np.clip(np.searchsorted(xs, xq) - 1, 0, len(xs) - 2))
        # start from the nearer node
        if abs(xq - xs[j + 1]) < abs(xq - xs[j]):
            j += 1
        x0, t0 = float(xs[j]), float(th[j])
        if x0 == xq:
            return t0
        tr = integrate(trace.potential, trace.energy, trace.offset,
                       x0, xq, t0, rtol=1e-12, atol_theta=1e-14,
                       max_step=0.05)
        return float(tr.thetas[-1])

    for k in range(k_first, k_last + 1):
        target = k * math.pi
        # bracket by nodes
        j = int(np.searchsorted(th, target))
        j = int(np.clip(j, 1, len(xs) - 1))
        a, b = float(xs[j - 1]), float(xs[j])
        # bisect the Hermite interpolant
        for _ in range(60):
            m = 0.5 * (a + b)
            if trace.theta_at(m) < target:
                a = m
            else:
                b = m
            if b - a < 1e-13 * max(1.0, abs(b)):
                break
        xq = 0.5 * (a + b)
        # Newton polish on the exact lift
        for _ in range(4):
            tv = theta_exact(xq)
            resid = tv - target
            if abs(resid) < refine_tol:
                break
            slope = rhs(xq, tv)[0]
            xq -= resid / slope
        out.append(xq)
    return np.array(out)


def _relative_spread(values: np.ndarray) -> float:
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return math.inf
    return float((np.max(values) - np.min(values)) / scale)


def _values_along(spec, energy, offset, x0, theta0, points, rtol):
    """theta and accumulated log r at successive points, chaining segments.

    Integrating segment by segment makes the sample values genuine endpoint
    values of the integrator instead of interpolants.
    """
    th = float(theta0)
    lr = 0.0
    x = x0
    thetas = []
    logrs = []
    for p in points:
        tr = integrate(spec, energy, offset, x, p, th, rtol=rtol,
                       atol_theta=rtol * 1e-2, atol_logr=rtol * 1e-2)
        th = float(tr.thetas[-1])
        lr += float(tr.log_amplitudes[-1])
        thetas.append(th)
        logrs.append(lr)
        x = p
    return np.array(thetas), np.array(logrs)


def wronskian_check(spec: PotentialSpec, energy: float, offset: float,
                    L: float, *, n_samples: int = 9,
                    rtol: float = 1e-10) -> float:
    """Relative spread of the Wronskian [psi_plus, psi_minus] over samples.

    psi_minus is integrated forward from -L, psi_plus backward from +L, each
    seeded with its decaying direction.  In a spectral gap the Wronskian
    r_plus r_minus sin(theta_plus - theta_minus) is constant up to integrator
    error, so the spread is a direct quality measure of the dichotomy.  The
    value is invariant under rescaling either solution.
    """
    th_m = seed_decaying_left(spec, energy, offset, L)
    th_p = seed_decaying_right(spec, energy, offset, L)
    pts = np.linspace(-L / 2, L / 2, n_samples)
    th1, lr1 = _values_along(spec, energy, offset, -L, th_m, pts, rtol)
    th2, lr2 = _values_along(spec, energy, offset, L, th_p, pts[::-1], rtol)
    th2, lr2 = th2[::-1], lr2[::-1]
    log_scale = lr1 + lr2
    ref = float(np.max(log_scale))
    w = np.exp(log_scale - ref) * np.sin(th2 - th1)
    return _relative_spread(w)
