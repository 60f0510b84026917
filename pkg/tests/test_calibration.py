import pytest

from slmpurify.calibration import MEASURED_VISIBILITY, calibrate, stage_visibilities
from slmpurify.io import load_settings
from slmpurify.synthesis import STAGES
from conftest import CALIBRATED


def test_calibration_reaches_targets():
    res = calibrate()
    assert res.success
    for s in STAGES:
        assert res.visibilities[s] == pytest.approx(MEASURED_VISIBILITY[s], abs=1e-6)
    cfg = res.config
    assert 0.0 < cfg.mu_spatial <= 1.0 and cfg.alpha_L > 0 and cfg.kappa_L > 0
    assert cfg.pump_fwhm == 1.0


def test_committed_config_matches_fresh_fit():
    committed = load_settings(CALIBRATED)[0]
    fresh = calibrate().config
    for key in ("mu_spatial", "alpha_L", "kappa_L"):
        assert getattr(committed, key) == pytest.approx(getattr(fresh, key), rel=1e-6)


def test_other_targets():
    res = calibrate(targets={"none": 0.5, "temporal": 0.7, "full": 0.95})
    assert res.residual_norm < 1e-6
    assert stage_visibilities(res.config)["temporal"] == pytest.approx(0.7, abs=1e-6)
