"""Parameter extraction: fluxonium energies from spectroscopy, DAC step from
flux shifts, and 1/f flux-noise amplitudes from dephasing rates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import DegenerateDataError, InvalidParameterError
from .fluxonium import DephasingModel, FluxoniumParams, f01

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitParameter:
    value: float
    stderr: float | None
    units: str


@dataclass(frozen=True)
class FitResult:
    parameters: dict[str, FitParameter]
    residual_rms: float
    residual_units: str
    iterations: int
    converged: bool
    extra: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.parameters[name].value

    def to_dict(self) -> dict[str, Any]:
        return {
            "parameters": {
                k: {"value": p.value, "stderr": p.stderr, "units": p.units} for k, p in self.parameters.items()
            },
            "residual_rms": self.residual_rms,
            "residual_units": self.residual_units,
            "iterations": self.iterations,
            "converged": self.converged,
            **({"extra": self.extra} if self.extra else {}),
        }


def _as_xy(points, name_x: str, name_y: str) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidParameterError("points", f"expected a sequence of ({name_x}, {name_y}) pairs")
    return arr[:, 0], arr[:, 1]


_ENERGY_NAMES = ("e_c", "e_j", "e_l")


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([x0] + [x0 + step * e for e in np.eye(x0.size)])


def _jacobian(model, theta: np.ndarray, d: float = 1e-5) -> np.ndarray:
    cols = []
    for e in np.eye(theta.size) * d:
        cols.append((model(theta + e) - model(theta - e)) / (2.0 * d))
    return np.column_stack(cols)


def fit_fluxonium(
    points: Sequence[tuple[float, float]],
    initial_guess: FluxoniumParams,
    *,
    restarts: int = 3,
    seed: int = 0,
    xatol: float = 1e-9,
    maxiter: int = 4000,
    fixed: Mapping[str, float] | None = None,
) -> FitResult:
    """Least-squares fit of (E_C, E_J, E_L) to measured f01 values.

    Nelder-Mead on the logarithms of the energies. The simplex is started
    from ``initial_guess`` and from ``restarts`` random points within +-30%
    of it, each run to a loose tolerance; the best of them is then polished
    to a simplex size of ``xatol``. Standard errors are the marginal ones from the
    Gauss-Newton covariance in log-parameter space.

    ``fixed`` pins energies by name (``"e_c"``, ``"e_j"``, ``"e_l"``); a
    pinned value may be zero, e.g. ``{"e_j": 0.0}`` for the harmonic limit.
    """
    phi, freq = _as_xy(points, "phi_ext", "f01")
    if phi.size < 4:
        raise InvalidParameterError("points", f"need at least 4 points, got {phi.size}")
    if np.ptp(phi) == 0:
        raise DegenerateDataError("all spectroscopy points share one flux value")
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(_ENERGY_NAMES)
    if unknown:
        raise InvalidParameterError("fixed", f"unknown parameter(s) {sorted(unknown)}")
    free = [i for i, name in enumerate(_ENERGY_NAMES) if name not in fixed]
    if not free:
        raise InvalidParameterError("fixed", "at least one energy must be free")
    full = np.array([fixed.get(name, getattr(initial_guess, name)) for name in _ENERGY_NAMES], dtype=float)
    guess = full[free]
    if np.any(guess <= 0):
        raise InvalidParameterError("initial_guess", "energies must be positive")

    def energies_of(theta):
        e = full.copy()
        e[free] = np.exp(theta)
        return e

    def model(theta):
        p = initial_guess.with_energies(*energies_of(theta))
        return np.array([f01(p, x) for x in phi])

    def cost(theta):
        return float(np.sum((model(theta) - freq) ** 2))

    def run(x0, tol, step):
        return minimize(cost, x0, method="Nelder-Mead", options={
            "xatol": tol, "fatol": np.inf, "maxiter": maxiter, "initial_simplex": _simplex(x0, step),
        })

    rng = np.random.default_rng(seed)
    starts = [np.log(guess)] + [np.log(guess * rng.uniform(0.7, 1.3, size=guess.size)) for _ in range(restarts)]
    runs = [run(x0, 1e-4, 0.1) for x0 in starts]
    for r in runs:
        logger.debug("simplex start -> %s, cost %.3e after %d iterations", np.exp(r.x), r.fun, r.nit)
    best = min(runs, key=lambda r: r.fun)
    final = run(best.x, xatol, 1e-3)
    total_iter = sum(r.nit for r in runs) + final.nit

    theta, s0 = final.x, final.fun
    n, k = phi.size, theta.size
    sigma2 = s0 / (n - k) if n > k else 0.0
    # Gauss-Newton covariance; the finite-difference Hessian of the cost is
    # too noisy along the nearly flat E_C/E_J/E_L valley
    jac = _jacobian(model, theta)
    jtj = jac.T @ jac
    var = np.full(len(_ENERGY_NAMES), np.nan)
    if np.linalg.cond(jtj) < 1e14:
        var[free] = sigma2 * np.diag(np.linalg.inv(jtj))
    energies = energies_of(theta)
    errs = energies * np.sqrt(var)
    params = {
        name: FitParameter(float(v), float(e) if np.isfinite(e) else None, "GHz")
        for name, v, e in zip(_ENERGY_NAMES, energies, errs)
    }
    for name in fixed:
        params[name] = FitParameter(float(fixed[name]), 0.0, "GHz")
    return FitResult(
        parameters=params,
        residual_rms=math.sqrt(s0 / n),
        residual_units="GHz",
        iterations=total_iter,
        converged=bool(final.success),
    )


def fit_dac_step(points: Sequence[tuple[float, float]]) -> FitResult:
    """Straight line through (digit, qubit flux in Phi0); the slope is the
    DAC step, reported in mPhi0."""
    x, y = _as_xy(points, "digit", "phi_qubit")
    if np.unique(x).size < 2:
        raise DegenerateDataError("need at least two distinct digits")
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss = float(np.sum(resid**2))
    if n > 2:
        s2 = ss / (n - 2)
        se_slope = math.sqrt(s2 / sxx)
        se_icpt = math.sqrt(s2 * (1.0 / n + xm**2 / sxx))
    else:
        se_slope = se_icpt = None
    return FitResult(
        parameters={
            "step": FitParameter(float(slope * 1000.0), None if se_slope is None else se_slope * 1000.0, "mPhi0"),
            "intercept": FitParameter(float(intercept), se_icpt, "Phi0"),
        },
        residual_rms=math.sqrt(ss / n),
        residual_units="Phi0",
        iterations=1,
        converged=True,
    )


def fit_flux_noise(
    points: Sequence[tuple[float, float]],
    kind: str,
    model: DephasingModel = DephasingModel(),
    *,
    offset: bool = False,
) -> FitResult:
    """1/f flux-noise amplitude (uPhi0) from (sensitivity GHz/Phi0, gamma 1/us).

    Fits ``gamma = c_kind * 2 pi |D| * A_phi`` through the origin, or with a
    constant rate offset when ``offset`` is set.
    """
    d, gamma = _as_xy(points, "sensitivity", "gamma")
    if d.size < 3:
        raise InvalidParameterError("points", f"need at least 3 points, got {d.size}")
    if np.all(d == 0):
        raise DegenerateDataError("all flux sensitivities are zero")
    if np.unique(np.abs(d)).size < (3 if offset else 2):
        raise DegenerateDataError("not enough distinct |sensitivity| values")
    x = model.coefficient(kind) * 2.0 * math.pi * np.abs(d) * 1e-3
    n = x.size
    if offset:
        a = np.column_stack([x, np.ones(n)])
        coef, *_ = np.linalg.lstsq(a, gamma, rcond=None)
        resid = gamma - a @ coef
        s2 = float(resid @ resid) / (n - 2) if n > 2 else 0.0
        cov = s2 * np.linalg.inv(a.T @ a)
        params = {
            "a_phi": FitParameter(float(coef[0]), float(math.sqrt(cov[0, 0])), "uPhi0"),
            "gamma_offset": FitParameter(float(coef[1]), float(math.sqrt(cov[1, 1])), "1/us"),
        }
    else:
        sxx = float(x @ x)
        amp = float(x @ gamma) / sxx
        resid = gamma - amp * x
        s2 = float(resid @ resid) / (n - 1)
        params = {"a_phi": FitParameter(amp, math.sqrt(s2 / sxx), "uPhi0")}
    return FitResult(
        parameters=params,
        residual_rms=float(math.sqrt(np.mean(resid**2))),
        residual_units="1/us",
        iterations=1,
        converged=True,
        extra={"kind": kind},
    )


def flux_from_frequency(params: FluxoniumParams, freq: float, branch: int, sweet_spot: float = 0.5,
                        max_offset: float = 0.25) -> float:
    """Invert f01(Phi) on one side of the sweet spot.

    ``branch`` = +1 searches above ``sweet_spot``, -1 below, 0 returns the
    sweet spot itself.
    """
    if branch == 0:
        return sweet_spot
    f0 = f01(params, sweet_spot)

    def g(delta):
        return f01(params, sweet_spot + branch * delta) - freq

    if g(0.0) * g(max_offset) > 0:
        raise DegenerateDataError(f"frequency {freq} GHz not reachable from sweet spot ({f0:.6f} GHz)")
    delta = brentq(g, 0.0, max_offset, xtol=1e-14, rtol=1e-15)
    return sweet_spot + branch * delta
