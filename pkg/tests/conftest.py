import numpy as np
import pytest

import resonatorlab as rl

TWO_PI = 2.0 * np.pi


def resonator(f_r=6.117e9, q_c=1500.0, q_i=15800.0, phi0=0.0):
    return rl.LinearResonatorParams(
        f_r=f_r, kappa_c=TWO_PI * f_r / q_c, kappa_int=TWO_PI * f_r / q_i, phi0=phi0
    )


def linewidth_hz(res):
    return res.kappa_l / TWO_PI


def grid_around(res, span_linewidths=15.0, points=2001, center=None):
    center = res.f_r if center is None else center
    half = span_linewidths / 2.0 * linewidth_hz(res)
    return np.linspace(center - half, center + half, points)


@pytest.fixture
def sample_resonator():
    """Parameters matching the representative measured device."""
    return resonator(phi0=0.2)


@pytest.fixture
def environment():
    return rl.EnvironmentParams(amplitude=0.87, alpha=0.4, tau=40e-9)
