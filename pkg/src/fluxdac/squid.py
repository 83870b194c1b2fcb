"""Washboard potential, metastable states and RCSJ transients of the
flux-storage rf-SQUID.

All phases are in radians (``phi = 2 pi Phi / Phi0``), energies in units of
E_J and time in units of ``1 / omega_c``. The loop obeys

    beta_c phi'' + phi' = -dU/dphi = -sin(phi) - (phi - phi_ext) / beta_L.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import InvalidParameterError, NonConvergenceError, OutOfRangeError, WaveformError
from .units import DerivedParams
from .waveform import PulseWaveform

TWO_PI = 2.0 * math.pi

DEFAULT_DT = 0.005
DEFAULT_SETTLE_TOL = 1e-8
DEFAULT_SETTLE_WINDOW = 50.0
_SCAN_STEP = math.pi / 50


def potential(phi, phi_ext, beta_l):
    """Loop potential in units of E_J."""
    return (phi - phi_ext) ** 2 / (2.0 * beta_l) - np.cos(phi)


def potential_gradient(phi, phi_ext, beta_l):
    return np.sin(phi) + (phi - phi_ext) / beta_l


def potential_curvature(phi, beta_l):
    return np.cos(phi) + 1.0 / beta_l


@dataclass(frozen=True)
class MetastableState:
    index_n: int
    phi_min: float
    energy: float
    curvature: float


def well_index(phi_min: float, phi_ext: float, beta_l: float) -> int:
    """Digit label of a minimum, after removing the common drift that a tilt
    imposes on all wells. Ties go toward zero."""
    x = (phi_min - phi_ext / (1.0 + beta_l)) / TWO_PI
    if x >= 0:
        return int(math.ceil(x - 0.5))
    return int(math.floor(x + 0.5))


def _bracket_nodes(phi_ext: float, beta_l: float) -> np.ndarray:
    lo = phi_ext - beta_l - _SCAN_STEP
    hi = phi_ext + beta_l + _SCAN_STEP
    nodes = [np.arange(lo, hi + _SCAN_STEP, _SCAN_STEP)]
    if beta_l > 1.0:
        # stationary points of the gradient split the axis into monotone
        # pieces, so a closely spaced min/max pair is never missed
        a = math.acos(-1.0 / beta_l)
        k = np.arange(math.floor(lo / TWO_PI) - 1, math.ceil(hi / TWO_PI) + 2)
        nodes += [TWO_PI * k + a, TWO_PI * k - a]
    nodes = np.concatenate(nodes)
    nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    return np.unique(nodes)


def _bisect(f, a: np.ndarray, b: np.ndarray, iters: int = 200) -> np.ndarray:
    """Vectorised bisection on brackets with f(a) < 0 <= f(b)."""
    a = a.copy()
    b = b.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        done = (m <= a) | (m >= b)
        if np.all(done):
            break
        neg = f(m) < 0
        a = np.where(neg & ~done, m, a)
        b = np.where(~neg & ~done, m, b)
    fa = np.abs(f(a))
    fb = np.abs(f(b))
    return np.where(fa < fb, a, b)


def find_minima(phi_ext: float, beta_l: float) -> list[MetastableState]:
    """All local minima of the loop potential at tilt ``phi_ext``, sorted by phase."""
    if not beta_l > 0:
        raise InvalidParameterError("beta_l", f"must be positive, got {beta_l!r}")
    phi_ext = float(phi_ext)

    def grad(p):
        return np.sin(p) + (p - phi_ext) / beta_l

    nodes = _bracket_nodes(phi_ext, beta_l)
    g = grad(nodes)
    sel = np.nonzero((g[:-1] < 0) & (g[1:] >= 0))[0]
    roots = _bisect(grad, nodes[sel], nodes[sel + 1])

    states = []
    for phi in roots:
        curv = math.cos(phi) + 1.0 / beta_l
        if curv <= 0:
            continue
        states.append(
            MetastableState(
                index_n=well_index(phi, phi_ext, beta_l),
                phi_min=float(phi),
                energy=float(potential(phi, phi_ext, beta_l)),
                curvature=curv,
            )
        )
    return states


def stable_indices(phi_ext: float, beta_l: float) -> tuple[int, int]:
    """Lowest and highest well index present at tilt ``phi_ext``."""
    wells = find_minima(phi_ext, beta_l)
    return wells[0].index_n, wells[-1].index_n


def critical_tilt(beta_l: float, from_index: int, direction: int) -> float:
    """Tilt at which well ``from_index`` stops being a local minimum.

    ``direction=+1`` gives the positive threshold (the phase escapes to the
    next well up), ``-1`` the negative one. At the threshold the minimum and
    the neighbouring maximum merge: ``cos(phi) = -1/beta_L`` together with
    ``phi_ext = phi + beta_L sin(phi)``.
    """
    if direction not in (1, -1):
        raise InvalidParameterError("direction", f"must be +1 or -1, got {direction!r}")
    if not beta_l > 1.0:
        raise OutOfRangeError(f"beta_L = {beta_l} <= 1: the single well never loses stability")
    n_lo, n_hi = stable_indices(0.0, beta_l)
    if not n_lo <= from_index <= n_hi:
        raise OutOfRangeError(f"well {from_index} does not exist at zero tilt (range {n_lo}..{n_hi})")
    a = math.acos(-1.0 / beta_l)
    phi_c = TWO_PI * from_index + direction * a
    return phi_c + beta_l * math.sin(phi_c)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    phases: np.ndarray
    velocities: np.ndarray
    final_state: MetastableState | None
    diverged: bool = False

    @property
    def final_phase(self) -> float:
        return float(self.phases[-1])

    def to_csv(self, dest: str | Path | io.TextIOBase | None = None) -> str | None:
        """Write ``tau, phi, dphi`` columns; returns the text when ``dest`` is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "phi", "dphi"])
        for row in zip(self.times, self.phases, self.velocities):
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if dest is None:
            return text
        if isinstance(dest, (str, Path)):
            Path(dest).write_text(text)
        else:
            dest.write(text)
        return None


@numba.njit(cache=True)
def _interp(t, kt, kv, j):
    n = kt.shape[0]
    if t <= kt[0]:
        return kv[0], j
    if t >= kt[n - 1]:
        return kv[n - 1], j
    while t > kt[j + 1]:
        j += 1
    a = (t - kt[j]) / (kt[j + 1] - kt[j])
    return kv[j] + a * (kv[j + 1] - kv[j]), j


@numba.njit(cache=True)
def _accel(phi, v, e, beta_c, beta_l):
    return (-v - math.sin(phi) - (phi - e) / beta_l) / beta_c


@numba.njit(cache=True)
def _rk4_kernel(phi0, kt, kv, beta_c, beta_l, dt, tol, window, n_max, every):
    t_end = kt[kt.shape[0] - 1]
    n_out = n_max // every + 2
    ts = np.empty(n_out)
    ps = np.empty(n_out)
    vs = np.empty(n_out)
    phi = phi0
    v = 0.0
    ts[0] = 0.0
    ps[0] = phi
    vs[0] = v
    k = 1
    j = 0
    quiet = 0.0
    status = 0  # 0 running out of time, 1 settled, 2 diverged
    half = 0.5 * dt
    for i in range(n_max):
        t = i * dt
        e0, j = _interp(t, kt, kv, j)
        e1, j = _interp(t + half, kt, kv, j)
        e2, j = _interp(t + dt, kt, kv, j)
        a1 = _accel(phi, v, e0, beta_c, beta_l)
        p2 = phi + half * v
        v2 = v + half * a1
        a2 = _accel(p2, v2, e1, beta_c, beta_l)
        p3 = phi + half * v2
        v3 = v + half * a2
        a3 = _accel(p3, v3, e1, beta_c, beta_l)
        p4 = phi + dt * v3
        v4 = v + dt * a3
        a4 = _accel(p4, v4, e2, beta_c, beta_l)
        phi += dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        t = (i + 1) * dt
        if not (math.isfinite(phi) and math.isfinite(v)):
            status = 2
        elif t >= t_end:
            if abs(v) < tol:
                quiet += dt
            else:
                quiet = 0.0
            if quiet >= window:
                status = 1
        if (i + 1) % every == 0 or status != 0:
            ts[k] = t
            ps[k] = phi
            vs[k] = v
            k += 1
        if status != 0:
            break
    return ts[:k], ps[:k], vs[:k], status


def rcsj_transient(
    phi0: float,
    waveform: PulseWaveform,
    derived: DerivedParams,
    settle_tol: float = DEFAULT_SETTLE_TOL,
    max_tau: float | None = None,
    *,
    dt: float = DEFAULT_DT,
    settle_window: float = DEFAULT_SETTLE_WINDOW,
    sample_every: int = 20,
) -> Trajectory:
    """Integrate the damped loop equation from rest at ``phi0``.

    ``waveform`` gives ``phi_ext(tau)`` in radians. Integration uses
    fixed-step RK4 and stops once ``|dphi/dtau| < settle_tol`` has held for
    ``settle_window`` after the waveform returns to baseline. Every
    ``sample_every``-th step is stored, plus the last one.
    """
    if not settle_tol > 0:
        raise InvalidParameterError("settle_tol", "must be positive")
    if not dt > 0:
        raise InvalidParameterError("dt", "must be positive")
    if max_tau is None:
        max_tau = waveform.end + 40.0 * settle_window + 1000.0
    if waveform.end > max_tau:
        raise WaveformError(f"waveform ends at tau={waveform.end}, beyond max_tau={max_tau}")
    n_max = int(math.ceil(max_tau / dt))
    ts, ps, vs, status = _rk4_kernel(
        float(phi0),
        np.ascontiguousarray(waveform.times),
        np.ascontiguousarray(waveform.values),
        float(derived.beta_c),
        float(derived.beta_l),
        float(dt),
        float(settle_tol),
        float(settle_window),
        n_max,
        max(1, int(sample_every)),
    )
    if status == 2:
        return Trajectory(ts, ps, vs, final_state=None, diverged=True)
    if status == 0:
        raise NonConvergenceError(
            f"phase did not settle within max_tau={max_tau} (|dphi/dtau| = {abs(vs[-1]):.3g})"
        )
    wells = find_minima(waveform.baseline, derived.beta_l)
    phi_end = ps[-1]
    final = min(wells, key=lambda w: abs(w.phi_min - phi_end))
    return Trajectory(ts, ps, vs, final_state=final)
