import os
import sys
import functools

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from Detection import detect
from Dynamics import CYCLE, InteractionParams, initial_state, propagate
from Hilbert import PROBE, ModeSpace

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))

# accumulated loss gamma * CYCLE = 1e-3 per mode over one exchange cycle
LOSS_RATE = 1e-3 / CYCLE


@functools.lru_cache(maxsize=None)
def operating_point(alpha_p2, gamma=LOSS_RATE):
    """Full single-mode pipeline at one probe intensity, both signal branches."""
    alpha = float(np.sqrt(alpha_p2))
    params = InteractionParams(g=1.0, gammas=(gamma, gamma, gamma), space=ModeSpace.standard())
    photon = propagate(initial_state(alpha, 1, params.space), params, CYCLE, list(np.linspace(0, CYCLE, 9)))
    vacuum = propagate(initial_state(alpha, 0, params.space), params, CYCLE)
    lo = alpha * np.exp(-0.5 * params.gamma(PROBE) * CYCLE)
    report = detect(photon.final, alpha, lo_amplitude=lo, rho_vacuum=vacuum.final)
    return report, photon, vacuum


@pytest.fixture(scope="session")
def pipeline():
    return operating_point
