"""Linear notch-resonator model and its complex least-squares fitter.

The fit proceeds in the classic staged fashion: estimate and remove the
cable delay, fit a circle to the delay-corrected data, fit the phase
winding around the circle center, translate the geometry into model
parameters, then refine all seven parameters with a trust-region
least-squares pass on the complex residuals.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .constants import HBAR
from .core import (
    EnvironmentParams,
    FrequencyTrace,
    LinearResonatorParams,
    dbm_to_watts,
)
from .errors import ConvergenceError, DegenerateGeometryError, InsufficientDataError

__all__ = [
    "PARAM_NAMES",
    "FitOptions",
    "LinearFitResult",
    "model_s21_linear",
    "estimate_delay",
    "circle_fit",
    "fit_linear",
    "photon_number",
]

#: Order of the free parameters in covariance matrices and uncertainty maps.
PARAM_NAMES = ("f_r", "kappa_c", "kappa_int", "phi0", "amplitude", "alpha", "tau")

MIN_FIT_SAMPLES = 16


def model_s21_linear(
    res: LinearResonatorParams, env: EnvironmentParams, f: float | np.ndarray
) -> complex | np.ndarray:
    """Complex feedline transmission of a notch resonator at frequency ``f``.

    Detuning convention: ``delta_r = omega_0 - omega_d``. The mismatch term
    ``kappa_c e^{i phi0}/cos(phi0)`` makes the model invariant under
    ``phi0 -> phi0 + pi``, so ``phi0`` is reported in (-pi/2, pi/2).
    """
    f = np.asarray(f, dtype=float)
    delta_r = 2.0 * math.pi * (res.f_r - f)
    kappa_l = res.kappa_l
    mismatch = res.kappa_c * np.exp(1j * res.phi0) / math.cos(res.phi0)
    resonant = (2j * delta_r + kappa_l - mismatch) / (2j * delta_r + kappa_l)
    background = env.amplitude * np.exp(1j * env.alpha) * np.exp(-2j * math.pi * f * env.tau)
    out = background * resonant
    return out if out.ndim else complex(out)


def estimate_delay(trace: FrequencyTrace, wing_fraction: float = 0.1) -> float:
    """Cable delay from the phase slope of the off-resonant trace wings.

    Returns ``-(1/2pi) d(phase)/df`` averaged over the two outer wings, each
    containing ``wing_fraction`` of the samples.
    """
    if not 0.0 < wing_fraction <= 0.25:
        raise ValueError(f"wing_fraction must be in (0, 0.25], got {wing_fraction}")
    n = len(trace)
    n_wing = int(round(n * wing_fraction))
    if n_wing < 4:
        raise InsufficientDataError(
            f"need at least 4 samples per wing, got {n_wing} "
            f"({n} samples at wing_fraction={wing_fraction})"
        )
    slopes = []
    for sl in (slice(0, n_wing), slice(n - n_wing, n)):
        phase = np.unwrap(np.angle(trace.values[sl]))
        slope = np.polyfit(trace.frequencies[sl], phase, 1)[0]
        slopes.append(slope)
    return -float(np.mean(slopes)) / (2.0 * math.pi)


def circle_fit(points: Sequence[complex] | np.ndarray) -> tuple[complex, float]:
    """Algebraic (Taubin-normalized) least-squares circle through ``points``.

    Returns ``(center, radius)``. Exact data is reproduced to rounding
    precision; collinear input raises :class:`DegenerateGeometryError`.
    """
    z = np.asarray(points, dtype=complex).ravel()
    if z.size < 3:
        raise DegenerateGeometryError(f"need at least 3 points, got {z.size}")
    x, y = z.real, z.imag
    cx, cy = x.mean(), y.mean()
    u, v = x - cx, y - cy
    q = u * u + v * v
    qm = q.mean()
    if qm <= 0.0:
        raise DegenerateGeometryError("all points coincide")
    scale = math.sqrt(qm)
    # Taubin normalization: the quadratic column is centered and rescaled so
    # the constraint matrix becomes the identity and plain SVD applies.
    basis = np.column_stack([(q - qm) / (2.0 * scale), u, v])
    _, _, vt = np.linalg.svd(basis, full_matrices=False)
    a0_raw, a1, a2 = vt[2]
    if abs(a0_raw) < 1e-12:
        raise DegenerateGeometryError("points are collinear; no finite circle fits them")
    a0 = a0_raw / (2.0 * scale)
    a3 = -qm * a0
    center = complex(-a1 / (2.0 * a0) + cx, -a2 / (2.0 * a0) + cy)
    radius = math.sqrt(max(a1 * a1 + a2 * a2 - 4.0 * a0 * a3, 0.0)) / (2.0 * abs(a0))
    if not (radius > 0.0 and math.isfinite(radius)):
        raise DegenerateGeometryError("circle fit produced a degenerate radius")
    return center, radius


def _refine_delay(freqs: np.ndarray, values: np.ndarray, tau0: float, span: float) -> float:
    """Polish the wing-slope delay estimate by maximizing circularity.

    Residual delay twists the delay-corrected locus away from a circle; a
    bounded 1-d search on the geometric circle-fit residual removes it. The
    bracket stays well inside one phase turn across the span, where the
    wing estimate is guaranteed to land.
    """

    def cost(tau):
        z = values * np.exp(2j * math.pi * freqs * tau)
        try:
            center, radius = circle_fit(z)
        except DegenerateGeometryError:
            return math.inf
        return float(np.sum((np.abs(z - center) - radius) ** 2))

    width = 0.2 / span
    sol = minimize_scalar(
        cost,
        bounds=(tau0 - width, tau0 + width),
        method="bounded",
        options={"xatol": 1e-5 / span},
    )
    tau = float(sol.x)
    return tau if cost(tau) <= cost(tau0) else tau0


def _wrap_angle(angle: float) -> float:
    """Wrap into (-pi, pi]."""
    return float(-((-angle + math.pi) % (2.0 * math.pi)) + math.pi)


def _wrap_half_pi(phi: float) -> float:
    """Wrap into (-pi/2, pi/2] using the model's phi0 -> phi0 + pi invariance."""
    return float(-((-phi + math.pi / 2) % math.pi) + math.pi / 2)


def _phase_model(f, theta0, q_l, f_r):
    return theta0 + 2.0 * np.arctan(2.0 * q_l * (f / f_r - 1.0))


def _smooth(z: np.ndarray, window: int) -> np.ndarray:
    if window < 3 or z.size < 4 * window:
        return z
    kernel = np.ones(window) / window
    out = np.convolve(z, kernel, mode="same")
    # Plain averages at the edges are biased by zero padding; keep raw values.
    half = window // 2
    out[:half] = z[:half]
    out[-half:] = z[-half:]
    return out


def _fit_phase(freqs: np.ndarray, z_centered: np.ndarray, f_r0: float, q_l0: float):
    """Fit ``theta(f) = theta0 + 2 arctan(2 Q_L (f/f_r - 1))`` to the winding angle.

    A light boxcar smoothing stabilizes the unwrap when the resonance circle
    is small compared to the noise; it only feeds the initialization, the
    final refinement always sees the raw data.
    """
    window = min(z_centered.size // 40, 15)
    window += 1 - window % 2  # keep it odd
    z_centered = _smooth(z_centered, window)
    theta = np.unwrap(np.angle(z_centered))

    def residual(p):
        return _phase_model(freqs, *p) - theta

    best = None
    i0 = int(np.argmin(np.abs(freqs - f_r0)))
    for factor in (1.0, 0.2, 5.0, 0.04, 25.0):
        p0 = np.array([theta[i0], q_l0 * factor, f_r0])
        try:
            sol = least_squares(
                residual, p0, x_scale=[1.0, q_l0 * factor, f_r0], method="lm"
            )
        except Exception:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise ConvergenceError("phase fit failed for every starting point")
    theta0, q_l, f_r = best.x
    return float(theta0), float(abs(q_l)), float(f_r)


@dataclass(frozen=True)
class FitOptions:
    """Knobs of :func:`fit_linear` (and, where noted, the other fitters)."""

    wing_fraction: float = 0.1
    max_iterations: int = 200
    cost_tol: float = 1e-12  # relative cost-decrease termination
    step_tol: float = 1e-12  # relative step-norm termination
    weights: np.ndarray | None = None  # optional per-point sigma weighting (1/sigma)


@dataclass(frozen=True)
class LinearFitResult:
    """Outcome of :func:`fit_linear`.

    ``uncertainties`` and ``covariance`` follow the :data:`PARAM_NAMES`
    ordering; ``n_photons`` is the on-resonance steady-state occupation at
    the trace's drive power (``None`` when the power is unknown).
    """

    resonator: LinearResonatorParams
    environment: EnvironmentParams
    uncertainties: Mapping[str, float]
    covariance: np.ndarray
    residual_rms: float
    n_photons: float | None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "uncertainties", MappingProxyType(dict(self.uncertainties)))


def _central_jacobian(residual, x: np.ndarray, x_scale: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with steps tied to the parameter scales."""
    m = residual(x).size
    jac = np.empty((m, x.size))
    for j in range(x.size):
        h = 1e-6 * x_scale[j]
        xp = x.copy()
        xp[j] += h
        xm = x.copy()
        xm[j] -= h
        jac[:, j] = (residual(xp) - residual(xm)) / (2.0 * h)
    return jac


def _scaled_pinv(jac: np.ndarray, x_scale: np.ndarray) -> np.ndarray:
    """``(J^T J)^{-1}`` computed via the scaled Jacobian ``J diag(x_scale)``.

    Scaling first keeps the normal matrix well conditioned when parameter
    magnitudes span many decades.
    """
    js = jac * x_scale[None, :]
    inv_scaled = np.linalg.pinv(js.T @ js)
    return x_scale[:, None] * inv_scaled * x_scale[None, :]


def _model_from_vector(p: np.ndarray, f: np.ndarray) -> np.ndarray:
    f_r, kappa_c, kappa_int, phi0, amplitude, alpha, tau = p
    delta_r = 2.0 * math.pi * (f_r - f)
    kappa_l = kappa_c + kappa_int
    mismatch = kappa_c * np.exp(1j * phi0) / np.cos(phi0)
    resonant = (2j * delta_r + kappa_l - mismatch) / (2j * delta_r + kappa_l)
    return amplitude * np.exp(1j * alpha) * np.exp(-2j * math.pi * f * tau) * resonant


def fit_linear(trace: FrequencyTrace, options: FitOptions | None = None) -> LinearFitResult:
    """Fit one trace to the linear notch model.

    Raises :class:`ConvergenceError` (carrying the last iterate) if the
    refinement stage exhausts its iteration budget. A negative internal rate
    at the optimum is pinned to zero and flagged in ``result.flags``.
    """
    options = options or FitOptions()
    n = len(trace)
    if n < MIN_FIT_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_FIT_SAMPLES} samples, got {n}")
    freqs = trace.frequencies
    values = trace.values
    flags: list[str] = []

    # Stage 1: delay estimate from the wings, polished for circularity,
    # then removed.
    tau0 = estimate_delay(trace, options.wing_fraction)
    tau0 = _refine_delay(freqs, values, tau0, trace.span)
    z1 = values * np.exp(2j * math.pi * freqs * tau0)

    # Stage 2: resonance circle of the delay-corrected data.
    center, radius = circle_fit(z1)

    # Stage 3: phase winding around the circle center gives f_r and Q_L.
    f_r0 = float(freqs[np.argmin(np.abs(values))])
    q_l0 = max(f_r0 / max(trace.span, 1e-300), 10.0) * 5.0
    theta0, q_l, f_r0 = _fit_phase(freqs, z1 - center, f_r0, q_l0)

    # Stage 4: translate the circle geometry into model parameters. The
    # off-resonant point sits diametrically opposite the resonance point.
    off_resonant = center - radius * np.exp(1j * theta0)
    a0 = abs(off_resonant)
    alpha0 = float(np.angle(off_resonant))
    phi0 = _wrap_half_pi(theta0 + math.pi - alpha0)
    kappa_l0 = 2.0 * math.pi * f_r0 / q_l
    kappa_c0 = min(2.0 * radius / max(a0, 1e-300) * math.cos(phi0), 1.0) * kappa_l0
    kappa_c0 = max(kappa_c0, 1e-6 * kappa_l0)
    p0 = np.array([f_r0, kappa_c0, kappa_l0 - kappa_c0, phi0, a0, alpha0, tau0])

    # Stage 5: full complex least-squares refinement of all 7 parameters.
    if options.weights is not None:
        w = np.asarray(options.weights, dtype=float)
        if w.shape != freqs.shape:
            raise ValueError("weights must match the trace length")
    else:
        w = None

    def residual(p):
        r = _model_from_vector(p, freqs) - values
        if w is not None:
            r = r * w
        return np.concatenate([r.real, r.imag])

    span = trace.span
    x_scale = np.array(
        [
            max(kappa_l0 / (2.0 * math.pi), 1e-6 * f_r0),
            kappa_l0,
            kappa_l0,
            0.3,
            a0,
            0.3,
            1.0 / (2.0 * math.pi * span),
        ]
    )
    sol = least_squares(
        residual,
        p0,
        method="lm",
        x_scale=x_scale,
        ftol=options.cost_tol,
        xtol=options.step_tol,
        gtol=1e-14,
        max_nfev=options.max_iterations * (len(p0) + 1),
    )
    if sol.status == 0:
        raise ConvergenceError(
            f"no convergence within {options.max_iterations} iterations",
            last_params=dict(zip(PARAM_NAMES, sol.x)),
        )

    f_r, kappa_c, kappa_int, phi0, amplitude, alpha, tau = sol.x
    if amplitude < 0.0:
        amplitude = -amplitude
        alpha += math.pi
    alpha = _wrap_angle(alpha)
    phi0 = _wrap_half_pi(phi0)
    if kappa_c <= 0.0:
        raise ConvergenceError(
            "optimum has non-positive coupling rate; the trace probably holds no dip",
            last_params=dict(zip(PARAM_NAMES, sol.x)),
        )
    if kappa_int < 0.0:
        flags.append("kappa_int pinned to 0 (optimum was negative)")
        kappa_int = 0.0

    # Stage 6: parameter covariance from the Jacobian, scaled by the
    # residual variance. Inverting in the scaled parameter space keeps the
    # normal matrix well conditioned despite the huge dynamic range of the
    # parameters.
    ssr = 2.0 * sol.cost
    dof = max(2 * n - len(p0), 1)
    jac = _central_jacobian(residual, sol.x, x_scale)
    covariance = (ssr / dof) * _scaled_pinv(jac, x_scale)
    sigmas = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    uncertainties = dict(zip(PARAM_NAMES, (float(s) for s in sigmas)))
    residual_rms = math.sqrt(ssr / n)

    resonator = LinearResonatorParams(
        f_r=float(f_r), kappa_c=float(kappa_c), kappa_int=float(kappa_int), phi0=float(phi0)
    )
    environment = EnvironmentParams(amplitude=float(amplitude), alpha=float(alpha), tau=float(tau))
    if span < 5.0 * resonator.kappa_l / (2.0 * math.pi):
        msg = "trace span below 5 linewidths; parameters may be poorly constrained"
        flags.append(msg)
        _warnings.warn(msg, stacklevel=2)

    n_photons = None
    if trace.drive_power is not None:
        n_photons = photon_number(resonator, trace.drive_power)
    return LinearFitResult(
        resonator=resonator,
        environment=environment,
        uncertainties=uncertainties,
        covariance=covariance,
        residual_rms=residual_rms,
        n_photons=n_photons,
        flags=tuple(flags),
    )


def photon_number(res: LinearResonatorParams, p_feedline: float) -> float:
    """On-resonance steady-state photon number at feedline power ``p_feedline`` [dBm].

    ``<N_ph> = (2 kappa_c / kappa_L^2) P[W] / (hbar omega_0)``.
    """
    p_watts = dbm_to_watts(p_feedline)
    omega0 = 2.0 * math.pi * res.f_r
    return 2.0 * res.kappa_c / res.kappa_l**2 * p_watts / (HBAR * omega0)
