import math
from pathlib import Path

import pytest

from slmpurify.io import load_settings
from slmpurify.physics import SourceConfig

ROOT = Path(__file__).resolve().parent.parent
CALIBRATED = ROOT / "configs" / "calibrated.toml"


@pytest.fixture
def cfg():
    return SourceConfig()


@pytest.fixture
def ideal_cfg():
    """Default geometry with a continuous (unpixelated) mask and full spatial coherence."""
    return SourceConfig(slm_pixelated=False, mu_spatial=1.0)


@pytest.fixture
def flat_cfg():
    """f = 1, no filters, no temporal phase: the flat-window oracle configuration."""
    return SourceConfig(kappa_L=0.0, filter_kind="ideal", alpha_L=0.0, mu_spatial=1.0)


@pytest.fixture(scope="session")
def calibrated_cfg():
    return load_settings(CALIBRATED)[0]


def flat_window_closed_form(cfg):
    """|C| for flat weights: product of two window sinc factors."""
    x = abs(cfg.beta_L_over_gamma) * cfg.slit_acceptance / 2
    return (math.sin(x) / x) ** 2
