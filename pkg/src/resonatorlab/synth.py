"""Forward-model synthetic data: linear traces, Kerr power sweeps and field
sweeps with reproducible additive noise.

Noise model: independent complex Gaussian per point with per-quadrature
standard deviation ``a 10^(-snr/20) / sqrt(2)``, i.e. ``snr_db`` is the
power signal-to-noise of the off-resonant background. Identical seeds give
bit-identical output. Multi-trace generators derive one child seed per
trace from ``(seed, trace index)`` only, so per-trace generation is
order-independent and may run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    EnvironmentParams,
    FieldSweepPoint,
    FrequencyTrace,
    LinearResonatorParams,
    PowerSweep,
)
from .errors import DomainError
from .fieldmodel import FieldModelParams, fr_vs_field
from .kerrfit import BRANCH_RULES, KerrParams, model_s21_kerr
from .linfit import model_s21_linear

__all__ = [
    "NoiseSpec",
    "derive_seed",
    "generate_linear_trace",
    "generate_kerr_sweep",
    "generate_field_sweep",
]

#: Sigma recorded for noiseless field sweeps so 1/sigma^2 weighting stays defined.
NOISELESS_FIELD_SIGMA = 1.0  # Hz


@dataclass(frozen=True)
class NoiseSpec:
    """Additive-noise configuration; ``snr_db=None`` means noiseless."""

    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.snr_db is not None and not self.snr_db > 0.0:
            raise ValueError(f"snr_db must be positive or None, got {self.snr_db}")

    @property
    def noiseless(self) -> bool:
        return self.snr_db is None


def derive_seed(seed: int, index: int) -> int:
    """Deterministic, order-independent child seed for trace ``index``."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _add_noise(values: np.ndarray, amplitude: float, noise: NoiseSpec) -> np.ndarray:
    if noise.noiseless:
        return values
    sigma = amplitude * 10.0 ** (-noise.snr_db / 20.0) / math.sqrt(2.0)
    rng = np.random.default_rng(noise.seed)
    re = rng.standard_normal(values.size)
    im = rng.standard_normal(values.size)
    return values + sigma * (re + 1j * im)


def generate_linear_trace(
    res: LinearResonatorParams,
    env: EnvironmentParams,
    grid: Sequence[float] | np.ndarray,
    power_dbm: float,
    noise: NoiseSpec = NoiseSpec(),
) -> FrequencyTrace:
    """Evaluate the linear notch model on ``grid`` and add noise."""
    freqs = np.asarray(grid, dtype=float)
    values = _add_noise(model_s21_linear(res, env, freqs), env.amplitude, noise)
    return FrequencyTrace(
        frequencies=freqs,
        values=values,
        drive_power=power_dbm,
        metadata={"origin": "synth-linear"},
    )


def generate_kerr_sweep(
    params: KerrParams,
    grid: Sequence[float] | np.ndarray,
    powers_dbm: Sequence[float],
    branch: str = "lowest",
    noise: NoiseSpec = NoiseSpec(),
) -> PowerSweep:
    """Kerr-model power sweep; one derived noise seed per power slice.

    ``kerr == 0`` delegates to the linear generator, so a zero-Kerr sweep is
    bit-identical to stacking :func:`generate_linear_trace` outputs with the
    matching :func:`derive_seed` child seeds.
    """
    if branch not in BRANCH_RULES:
        raise ValueError(f"unknown branch rule {branch!r}; expected one of {BRANCH_RULES}")
    freqs = np.asarray(grid, dtype=float)
    traces = []
    for i, power in enumerate(powers_dbm):
        child = NoiseSpec(snr_db=noise.snr_db, seed=derive_seed(noise.seed, i))
        if params.kerr == 0.0:
            res0 = params.linear
            linear_equiv = LinearResonatorParams(
                f_r=res0.f_r, kappa_c=res0.kappa_c, kappa_int=res0.kappa_int, phi0=params.phi
            )
            traces.append(
                generate_linear_trace(linear_equiv, params.environment, freqs, power, child)
            )
            continue
        values = _add_noise(
            model_s21_kerr(params, freqs, power, branch),
            params.environment.amplitude,
            child,
        )
        traces.append(
            FrequencyTrace(
                frequencies=freqs,
                values=values,
                drive_power=power,
                metadata={"origin": "synth-kerr"},
            )
        )
    return PowerSweep(traces=tuple(traces))


def generate_field_sweep(
    params: FieldModelParams,
    fields: Sequence[float] | np.ndarray,
    sigma_f: float,
    seed: int = 0,
) -> list[FieldSweepPoint]:
    """Tuning-curve samples with Gaussian scatter of std ``sigma_f`` [Hz]."""
    if sigma_f < 0.0:
        raise ValueError(f"sigma_f must be non-negative, got {sigma_f}")
    b = np.asarray(fields, dtype=float)
    if np.any(b < 0.0) or np.any(b >= params.b_max):
        raise DomainError(
            f"fields must lie in [0, {params.b_max}) T for the requested parameters"
        )
    clean = np.atleast_1d(fr_vs_field(params, b))
    if sigma_f > 0.0:
        rng = np.random.default_rng(seed)
        observed = clean + sigma_f * rng.standard_normal(clean.size)
        recorded_sigma = sigma_f
    else:
        observed = clean
        recorded_sigma = NOISELESS_FIELD_SIGMA
    return [
        FieldSweepPoint(field=float(bi), resonance=float(fi), sigma=recorded_sigma)
        for bi, fi in zip(b, observed)
    ]
