"""Two-qubit polarization tomography with a maximum-likelihood estimator.

Retarder convention (the only place it is defined): a plate with fast axis at
angle ``t`` and retardance ``g`` acts as ``R(-t) @ diag(1, exp(i g)) @ R(t)``
with ``R(t) = [[cos t, sin t], [-sin t, cos t]]``.  An arm with quarter-wave
angle ``q``, half-wave angle ``h`` and polarizer axis ``p`` projects onto
``HWP(h) @ QWP(q) @ (cos p, sin p)``.  With this convention the circular
state reached with ``q = 45 deg`` is ``R = (|H> + i|V>)/sqrt(2)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import kernels
from ._kernels_py import N_PARAMS, params_to_tmatrix, tmatrix_to_params


class DegenerateSettingsError(ValueError):
    """The measured projectors do not span the two-qubit operator space."""


class BootstrapError(RuntimeError):
    pass


def _rot(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]])


def retarder(angle: float, retardance: float) -> np.ndarray:
    return _rot(-angle) @ np.diag([1.0, np.exp(1j * retardance)]) @ _rot(angle)


def quarter_wave(angle: float) -> np.ndarray:
    return retarder(angle, math.pi / 2)


def half_wave(angle: float) -> np.ndarray:
    return retarder(angle, math.pi)


@dataclass(frozen=True)
class ArmSetting:
    qwp: float = 0.0
    hwp: float = 0.0
    polarizer: float = 0.0

    def __post_init__(self):
        for name in ("qwp", "hwp", "polarizer"):
            object.__setattr__(self, name, getattr(self, name) % math.pi)

    def state(self) -> np.ndarray:
        pol = np.array([math.cos(self.polarizer), math.sin(self.polarizer)], dtype=complex)
        return half_wave(self.hwp) @ quarter_wave(self.qwp) @ pol


@dataclass(frozen=True)
class MeasurementSetting:
    first: ArmSetting
    second: ArmSetting
    label: str = ""


def projector_from_setting(s: MeasurementSetting) -> np.ndarray:
    v = np.kron(s.first.state(), s.second.state())
    return np.outer(v, v.conj())


ARM_BASES = {
    "H": ArmSetting(0.0, 0.0, 0.0),
    "V": ArmSetting(0.0, math.pi / 4, 0.0),
    "D": ArmSetting(0.0, math.pi / 8, 0.0),
    "R": ArmSetting(math.pi / 4, 0.0, 0.0),
}


def default_setting_set() -> list[MeasurementSetting]:
    """The product set {H, V, D, R} x {H, V, D, R}."""
    return [MeasurementSetting(ARM_BASES[a], ARM_BASES[b], a + b) for a in "HVDR" for b in "HVDR"]


def projector_array(settings) -> np.ndarray:
    return np.array([projector_from_setting(s) for s in settings])


def gram_rank(projectors, tol=1e-10) -> int:
    vecs = np.asarray(projectors).reshape(len(projectors), -1)
    sv = np.linalg.svd(vecs, compute_uv=False)
    return int(np.sum(sv > tol * sv.max()))


@dataclass
class TomographyDataset:
    settings: list
    counts: np.ndarray
    total_pairs: float
    total_exposure: float = 60.0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if len(self.counts) != len(self.settings):
            raise ValueError("counts and settings differ in length")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if not self.total_pairs > 0:
            raise ValueError("total_pairs must be positive")


def simulate_counts(rho, settings, total_pairs: float, seed=None, noise: bool = True,
                    exposure: float = 60.0) -> TomographyDataset:
    """Counts for each setting: Poisson with mean ``total_pairs * Tr(P rho)``.

    With ``noise=False`` the expectations are returned unchanged.
    """
    if not total_pairs > 0:
        raise ValueError("total_pairs must be positive")
    probs = np.einsum("kab,ba->k", projector_array(settings), np.asarray(rho)).real
    expected = total_pairs * np.clip(probs, 0.0, None)
    if noise:
        counts = np.random.default_rng(seed).poisson(expected).astype(float)
    else:
        counts = expected
    return TomographyDataset(list(settings), counts, float(total_pairs), exposure)


@dataclass
class ReconstructionResult:
    rho: np.ndarray
    log_likelihood: float
    fidelity_vs_target: float = float("nan")
    fidelity_error: float = float("nan")
    converged: bool = True
    grad_norm: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def rho_from_params(params) -> np.ndarray:
    t = params_to_tmatrix(params)
    m = t.conj().T @ t
    rho = m / np.trace(m).real
    return 0.5 * (rho + rho.conj().T)


def log_likelihood(rho, data: TomographyDataset) -> float:
    """Poisson log-likelihood sum(n ln p - N p), dropping data-only constants."""
    p = np.einsum("kab,ba->k", projector_array(data.settings), rho).real
    n = data.counts
    pos = n > 0
    return float(np.sum(n[pos] * np.log(np.maximum(p[pos], 1e-300))) - data.total_pairs * np.sum(p))


def _objective(x, proj, counts, total, scale):
    nll, g = kernels.poisson_nll_grad(x, proj, counts, total)
    tau = float(x @ x)
    # pins the scale of T, which the likelihood does not see
    return nll / scale + (tau - 1.0) ** 2, g / scale + 4.0 * (tau - 1.0) * x


def _hessian(x, args, h=1e-6):
    cols = []
    for e in np.eye(x.size) * h:
        cols.append((_objective(x + e, *args)[1] - _objective(x - e, *args)[1]) / (2 * h))
    hess = np.array(cols)
    return 0.5 * (hess + hess.T)


def _newton_polish(x, proj, counts, total, scale, gtol, max_steps=50, rcond=1e-6):
    """Newton steps after BFGS, whose line searches stall near rank-deficient optima.

    At such optima the Cholesky factor has gauge directions that leave rho
    unchanged (near-zero Hessian eigenvalues); they are dropped from the
    step so it cannot run off along them.
    """
    args = (proj, counts, total, scale)
    f, g = _objective(x, *args)
    steps = 0
    for steps in range(1, max_steps + 1):
        if np.linalg.norm(g) < 1e-3 * gtol:
            break
        w, v = np.linalg.eigh(_hessian(x, args))
        keep = w > rcond * w.max()
        step = -(v[:, keep] @ ((v[:, keep].T @ g) / w[keep]))
        t = 1.0
        while t > 1e-8:
            fn, gn = _objective(x + t * step, *args)
            if fn <= f:
                break
            t *= 0.5
        else:
            break
        x, f, g = x + t * step, fn, gn
    return x, steps


def mle_reconstruct(data: TomographyDataset, target=None, restarts: int = 3, seed: int = 0,
                    gtol: float = 1e-8, maxiter: int = 1000) -> ReconstructionResult:
    """Maximum-likelihood density matrix, parameterised as T^H T / Tr(T^H T).

    BFGS on the 16 real Cholesky parameters from ``restarts`` starting points
    (the maximally mixed state, then random draws from ``seed``); the best
    optimum is returned.  ``converged`` reports whether the likelihood
    gradient norm (per detected count) fell below ``gtol``.
    """
    proj = projector_array(data.settings)
    if gram_rank(proj) < 16:
        raise DegenerateSettingsError("measurement projectors are not informationally complete")
    counts = data.counts
    total = data.total_pairs
    scale = max(float(np.sum(counts)), 1.0)
    rng = np.random.default_rng(seed)
    starts = [tmatrix_to_params(0.5 * np.eye(4))]
    for _ in range(max(restarts, 1) - 1):
        x = rng.normal(size=N_PARAMS)
        starts.append(x / np.linalg.norm(x))
    best = None
    for x0 in starts:
        res = minimize(_objective, x0, args=(proj, counts, total, scale), jac=True, method="BFGS",
                       options={"gtol": 1e-10, "maxiter": maxiter})
        if best is None or res.fun < best.fun:
            best = res
    x, newton_steps = _newton_polish(best.x, proj, counts, total, scale, gtol)
    _, g = kernels.poisson_nll_grad(x, proj, counts, total)
    gnorm = float(np.linalg.norm(g / scale))
    rho = rho_from_params(x)
    out = ReconstructionResult(
        rho=rho,
        log_likelihood=log_likelihood(rho, data),
        converged=gnorm < gtol,
        grad_norm=gnorm,
        diagnostics={"iterations": int(best.nit), "newton_steps": newton_steps,
                     "message": str(best.message), "restarts": len(starts)},
    )
    if target is not None:
        out.fidelity_vs_target = fidelity(rho, target)
    return out


def fidelity(rho, target) -> float:
    """Overlap <t|rho|t> with a normalised pure target state."""
    t = np.asarray(target, dtype=complex)
    if abs(np.vdot(t, t).real - 1.0) > 1e-9:
        raise ValueError("target state must be normalised")
    return float(np.real(np.vdot(t, np.asarray(rho) @ t)))


def _one_resample(data, target, child, restarts):
    rng = np.random.default_rng(child)
    resampled = TomographyDataset(data.settings, rng.poisson(data.counts).astype(float),
                                  data.total_pairs, data.total_exposure)
    try:
        res = mle_reconstruct(resampled, target, restarts=restarts, seed=int(child.generate_state(1)[0]))
    except (ValueError, np.linalg.LinAlgError):
        return None
    return res.fidelity_vs_target if res.converged else None


def bootstrap_error(data: TomographyDataset, target, resamples: int = 100, seed: int = 0,
                    restarts: int = 3, workers: int = 1) -> float:
    """Parametric-bootstrap standard deviation of the fidelity.

    Every resample draws Poisson counts around the observed ones from its own
    RNG stream spawned off ``seed``, so the result does not depend on
    ``workers``.
    """
    if resamples < 2:
        raise ValueError("need at least two resamples")
    children = np.random.SeedSequence(seed).spawn(resamples)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            fids = list(pool.map(lambda c: _one_resample(data, target, c, restarts), children))
    else:
        fids = [_one_resample(data, target, c, restarts) for c in children]
    ok = np.array([f for f in fids if f is not None])
    failures = resamples - ok.size
    if failures > 0.1 * resamples:
        raise BootstrapError(f"{failures} of {resamples} bootstrap reconstructions failed")
    return float(np.std(ok, ddof=1))


BELL_TARGETS = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / math.sqrt(2),
    "phi-pi2": np.array([1, 0, 0, 1j], dtype=complex) / math.sqrt(2),
}

# offset added to b1 that produces each target under <VV|rho|HH> = C/2
BELL_ZETA = {"phi+": 0.0, "phi-": math.pi, "phi-pi2": math.pi / 2}
