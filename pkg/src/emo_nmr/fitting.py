"""Calibration fits against drive-power sweeps.

Covers the gap from the spring-softening slope, the mechanical bath
temperature and phase-noise level from the noise-to-tone area ratio, and the
opto-mechanical cooperativity from absolutely calibrated noise and tone areas.
Synthetic sweep generators are included since no measured sweeps ship with
the package.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .electromech import drive_frequency_shift, electromech_cooperativity, g_em_single_photon, electromech_coupling
from .io import read_csv
from .noise import mechanical_weight, thermal_occupation
from .cavity import intracavity_photon_number
from .units import EPSILON_0, HBAR, K_B, dbm_to_watts, photon_flux, zero_point_fluctuation

log = logging.getLogger(__name__)

RATIO_PARAMS = ("T_eff", "eta_p", "L_delta")
CONVENTIONS = ("closed_form", "spectral")


class FitError(RuntimeError):
    """A fit could not produce a trustworthy answer; ``best`` holds what it had."""

    def __init__(self, message, best: "FitResult | None" = None):
        super().__init__(message)
        self.best = best


@dataclass
class FitResult:
    params: dict
    residual_norm: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"params": dict(self.params), "residual_norm": self.residual_norm,
                "iterations": self.iterations, "converged": self.converged, **self.extra}


@dataclass(frozen=True)
class PowerSweep:
    """Drive powers (W) with an observable and its 1-sigma uncertainty, sorted by power."""

    P_D: np.ndarray
    value: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P_D, dtype=float)
        v = np.asarray(self.value, dtype=float)
        s = np.asarray(self.sigma, dtype=float) if self.sigma is not None else np.ones_like(v)
        if not (P.shape == v.shape == s.shape) or P.ndim != 1:
            raise ValueError("sweep columns must be 1-D and equally long")
        if np.any(P <= 0):
            raise ValueError("drive powers must be positive")
        order = np.argsort(P, kind="stable")
        object.__setattr__(self, "P_D", P[order])
        object.__setattr__(self, "value", v[order])
        object.__setattr__(self, "sigma", s[order])

    def __len__(self):
        return len(self.P_D)

    @classmethod
    def from_dbm(cls, dbm, value, sigma=None) -> "PowerSweep":
        P = np.array([dbm_to_watts(p) for p in np.atleast_1d(dbm)])
        value = np.asarray(value, dtype=float)
        return cls(P, value, np.ones_like(value) if sigma is None else np.asarray(sigma, dtype=float))

    def rows(self):
        for P, v, s in zip(self.P_D, self.value, self.sigma):
            yield (10.0 * math.log10(P / 1e-3), v, s)


def load_sweep(path) -> PowerSweep:
    rows, _ = read_csv(path, "calibration")
    if not rows:
        raise FitError(f"{path}: sweep contains no data rows")
    arr = np.array(rows, dtype=float)
    return PowerSweep.from_dbm(arr[:, 0], arr[:, 1], arr[:, 2])


# ---------------------------------------------------------------- engine

def minimize(residuals, initial, bounds=None, xtol: float = 1e-9, ftol: float = 1e-12,
             max_iter: int = 2000, names=None) -> FitResult:
    """Derivative-free least squares on a vector residual.

    Wraps scipy's Nelder-Mead simplex.  Parameters are scaled by the starting
    point so ``xtol`` acts as a relative tolerance; ``ftol`` is absolute on the
    sum of squares.  A NaN objective aborts at once.  After convergence the
    simplex is restarted once from the optimum to guard against a collapsed
    simplex.  Raises :class:`FitError` if the iteration cap is hit.
    """
    x0 = np.atleast_1d(np.asarray(initial, dtype=float))
    if not np.all(np.isfinite(x0)):
        raise FitError("initial point is not finite")
    names = list(names) if names is not None else [f"x{i}" for i in range(x0.size)]
    scale = np.where(x0 != 0, np.abs(x0), 1.0)
    sbounds = None
    if bounds is not None:
        lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
        hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise FitError("initial point lies outside the bounds")
        sbounds = optimize.Bounds(lo / scale, hi / scale)

    history = []
    best = {"f": math.inf, "x": x0.copy()}

    def objective(u):
        x = u * scale
        r = np.asarray(residuals(x), dtype=float)
        f = float(np.dot(r, r))
        if not math.isfinite(f):
            raise FitError(f"objective is not finite at {dict(zip(names, x.tolist()))}")
        if f < best["f"]:
            best["f"], best["x"] = f, x.copy()
        return f

    def callback(intermediate_result):
        history.append(best["f"])

    total_iter = 0
    u = x0 / scale
    converged = False
    for _ in range(2):
        res = optimize.minimize(objective, u, method="Nelder-Mead", bounds=sbounds, callback=callback,
                                options={"xatol": xtol, "fatol": ftol, "maxiter": max(max_iter - total_iter, 1),
                                         "adaptive": x0.size > 2})
        total_iter += int(res.nit)
        converged = bool(res.success)
        u = best["x"] / scale
        if not converged or total_iter >= max_iter:
            break
    result = FitResult(dict(zip(names, best["x"].tolist())), math.sqrt(best["f"]), total_iter, converged, history)
    if not converged:
        raise FitError(f"no convergence within {max_iter} iterations", best=result)
    return result


# ---------------------------------------------------------------- gap

def gap_slope_coefficient(m, omega0, A, R) -> float:
    """``k`` in ``delta_omega = -k P_D / d0**3``."""
    return R * EPSILON_0 * A / (4.0 * m * omega0)


def fit_gap(sweep: PowerSweep, m, omega0, A, R) -> FitResult:
    """Electrode gap from the linear drift of the mechanical frequency with drive power.

    Weighted regression through the origin gives the slope; the gap follows
    from its cube root.
    """
    if len(sweep) < 2 or np.unique(sweep.P_D).size < 2:
        raise FitError("need at least two distinct drive powers")
    x, y = sweep.P_D, sweep.value
    w = 1.0 / sweep.sigma**2
    slope = float(np.sum(w * x * y) / np.sum(w * x * x))
    if not slope < 0:
        raise FitError(f"frequency shift does not decrease with drive power (slope {slope:.3e} rad/s/W)")
    k = gap_slope_coefficient(m, omega0, A, R)
    d0 = (k / -slope) ** (1.0 / 3.0)
    resid = (y - slope * x) * np.sqrt(w)
    return FitResult({"d0": d0}, float(np.linalg.norm(resid)), 1, True, extra={"slope_rad_s_per_W": slope})


def synth_gap_sweep(cfg, powers_dbm, d0=None, noise: float = 0.0, seed: int = 0) -> PowerSweep:
    """Frequency shifts with relative Gaussian scatter ``noise``."""
    rng = np.random.default_rng(seed)
    d0 = cfg.d0 if d0 is None else d0
    P = np.array([dbm_to_watts(p) for p in powers_dbm])
    shift = drive_frequency_shift(P, cfg.R_circuit, cfg.m_eff, cfg.omega_0, cfg.A_cap, d0)
    sigma = np.abs(shift) * noise if noise > 0 else np.ones_like(shift)
    return PowerSweep(P, shift * (1.0 + noise * rng.standard_normal(P.size)), sigma)


# ---------------------------------------------------------------- ratio model

def _cooperativity(cfg, P_D, omega):
    g = g_em_single_photon(cfg.omega_LC, zero_point_fluctuation(cfg.m_eff, cfg.omega_0), cfg.d0, cfg.eta_cap)
    G = electromech_coupling(g, 1.0, cfg.omega_LC, cfg.kappa_iT) * np.sqrt(P_D)
    return electromech_cooperativity(G, cfg.gamma_m, cfg.kappa_iT, omega)


def _ratio_terms(P_D, cfg, tone, convention):
    """Split the noise-to-tone ratio into ``N = n0 + a*T_eff + b*eta_p`` and ``D = d0 + c*L``."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    P_D = np.asarray(P_D, dtype=float)
    g = cfg.gamma_m
    r = cfg.kappa_i / cfg.kappa_iT
    w_T = cfg.omega_m + tone["Delta_T"]
    p_D = photon_flux(P_D, cfg.omega_D)
    p_T = photon_flux(tone["P_T"], cfg.omega_D + w_T)
    C_m = _cooperativity(cfg, P_D, cfg.omega_m)
    C_T = _cooperativity(cfg, P_D, w_T)
    k = 4.0 if convention == "spectral" else 1.0
    n0 = C_m * g * thermal_occupation(cfg.omega_LC, cfg.T_bath)
    a = 2.0 * g * K_B / (HBAR * cfg.omega_m) * np.ones_like(P_D)
    b = k * C_m * r * p_D
    A_T = k * mechanical_weight(w_T, cfg.omega_m, g) * C_T * r
    return n0, a, b, A_T * p_T, A_T * p_D


def noise_ratio_model(P_D, params: dict, cfg, tone: dict, convention: str = "closed_form"):
    """Integrated noise area over integrated tone area versus drive power.

    ``convention="closed_form"`` uses the closed form as usually quoted, where the
    phase-noise weight is ``eta_p`` and the tone-window phase noise is
    ``L_delta = L(omega_m + Delta_T) * delta``.  ``"spectral"`` is what direct
    integration of the sideband spectrum gives: a factor 4 on the ``eta_p``
    term and on the tone, with ``L_delta`` meaning ``L * delta / 2 pi``.
    Optical parameters do not enter either form.
    """
    n0, a, b, d0, c = _ratio_terms(P_D, cfg, tone, convention)
    num = n0 + a * params["T_eff"] + b * params["eta_p"]
    den = d0 + c * params["L_delta"]
    return num / den


def synth_ratio_sweep(cfg, tone, powers_dbm, params, noise: float = 0.0, seed: int = 0,
                      convention: str = "closed_form") -> PowerSweep:
    rng = np.random.default_rng(seed)
    P = np.array([dbm_to_watts(p) for p in powers_dbm])
    clean = noise_ratio_model(P, params, cfg, tone, convention)
    sigma = clean * noise if noise > 0 else clean
    return PowerSweep(P, clean * (1.0 + noise * rng.standard_normal(P.size)), sigma)


def fit_bath_and_phase(sweep: PowerSweep, cfg, tone: dict, convention: str = "closed_form",
                       max_iter: int = 2000) -> FitResult:
    """Fit ``T_eff``, ``eta_p`` and ``L_delta`` to a noise/tone ratio sweep.

    Cross-multiplying makes the model linear in all three parameters, which
    gives an exact starting point; a simplex polish on log-parameters then
    minimises the relative residual of the ratio itself.
    """
    if len(sweep) == 0:
        raise FitError("empty sweep")
    if len(sweep) < 4:
        raise FitError(f"need at least 4 drive powers, got {len(sweep)}")
    span_db = 10.0 * math.log10(sweep.P_D[-1] / sweep.P_D[0])
    if span_db < 10.0:
        raise FitError(f"drive powers span only {span_db:.1f} dB; need >= 10 dB")
    y = sweep.value
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitError("ratios must be finite and positive")
    n0, a, b, d0, c = _ratio_terms(sweep.P_D, cfg, tone, convention)
    rel = sweep.sigma / y

    # linear stage: a*T + b*eta - y*c*L = y*d0 - n0, each row scaled to unit relative error
    M = np.column_stack([a, b, -y * c])
    rhs = y * d0 - n0
    row = 1.0 / (y * d0 * rel)
    col = np.abs(M * row[:, None]).max(axis=0)
    col[col == 0] = 1.0
    sol, *_ = np.linalg.lstsq(M * row[:, None] / col, rhs * row, rcond=None)
    lin = sol / col
    if np.all(lin <= 0):
        raise FitError(f"linearised fit gives non-positive parameters {dict(zip(RATIO_PARAMS, lin.tolist()))}")
    # scatter can push a weakly constrained term negative; restart it from its magnitude
    lin = np.where(lin > 0, lin, np.abs(lin) + 1e-6 * np.max(np.abs(lin * col)) / col)

    def residuals(logp):
        p = dict(zip(RATIO_PARAMS, np.exp(logp)))
        return (noise_ratio_model(sweep.P_D, p, cfg, tone, convention) / y - 1.0) / rel

    res = minimize(residuals, np.log(lin), max_iter=max_iter, names=RATIO_PARAMS, xtol=1e-10)
    res.params = {k: float(math.exp(v)) for k, v in res.params.items()}
    res.extra["linear_estimate"] = dict(zip(RATIO_PARAMS, lin.tolist()))
    res.extra["convention"] = convention
    return res


# ---------------------------------------------------------------- opto-mechanics

def _optical_prefactor(cfg):
    N_D = intracavity_photon_number(cfg.P_optical, cfg.Omega_D, cfg.kappa_o, cfg.kappa_oT)
    return cfg.kappa_o * N_D * (cfg.kappa_o / cfg.kappa_oT)


def noise_area_model(P_D, C_om, cfg, T_eff=None, eta_p=None):
    """Integrated noise area (quanta flux squared) over the full mechanical line, shot floor removed."""
    T_eff = cfg.T_eff if T_eff is None else T_eff
    eta_p = cfg.eta_p if eta_p is None else eta_p
    P_D = np.asarray(P_D, dtype=float)
    g = cfg.gamma_m
    r = cfg.kappa_i / cfg.kappa_iT
    C_m = _cooperativity(cfg, P_D, cfg.omega_m)
    inner = 2 * g * thermal_occupation(cfg.omega_m, T_eff) + C_m * (
        g * thermal_occupation(cfg.omega_LC, cfg.T_bath) + 4 * r * eta_p * photon_flux(P_D, cfg.omega_D))
    return _optical_prefactor(cfg) * C_om * inner


def tone_area_model(P_D, C_om, cfg, tone, L_delta):
    """Integrated tone-window area; ``L_delta`` is ``L * delta / 2 pi``."""
    P_D = np.asarray(P_D, dtype=float)
    r = cfg.kappa_i / cfg.kappa_iT
    w_T = cfg.omega_m + tone["Delta_T"]
    C_T = _cooperativity(cfg, P_D, w_T)
    p_T = photon_flux(tone["P_T"], cfg.omega_D + w_T)
    A_T = 4 * mechanical_weight(w_T, cfg.omega_m, cfg.gamma_m) * C_T * r
    return _optical_prefactor(cfg) * C_om * A_T * (p_T + L_delta * photon_flux(P_D, cfg.omega_D))


def _scale_fit(y, model_unit):
    """Least-squares ``C`` minimising the relative residual of ``C * model_unit`` against ``y``."""
    q = model_unit / y
    return float(np.sum(q) / np.sum(q * q)), q


def fit_optomech(noise_sweep: PowerSweep, tone_sweep: PowerSweep, cfg, tone: dict, L_delta: float,
                 T_eff=None, eta_p=None) -> FitResult:
    """Two independent cooperativity estimates from the noise and tone areas.

    Both areas are linear in ``C_om`` once the electrical and mechanical
    parameters are known, so each estimate is closed form.
    """
    for name, sw in (("noise", noise_sweep), ("tone", tone_sweep)):
        if len(sw) == 0:
            raise FitError(f"{name} sweep is empty")
        if np.any(~np.isfinite(sw.value)) or np.any(sw.value <= 0):
            raise FitError(f"{name} sweep must contain finite positive areas")
    c_n, q_n = _scale_fit(noise_sweep.value, noise_area_model(noise_sweep.P_D, 1.0, cfg, T_eff, eta_p))
    c_t, q_t = _scale_fit(tone_sweep.value, tone_area_model(tone_sweep.P_D, 1.0, cfg, tone, L_delta))
    resid = np.concatenate([c_n * q_n - 1.0, c_t * q_t - 1.0])
    disc = abs(c_n - c_t) / (0.5 * (c_n + c_t))
    return FitResult({"C_om_noise": c_n, "C_om_tone": c_t}, float(np.linalg.norm(resid)), 1, True,
                     extra={"relative_discrepancy": disc})


def synth_area_sweeps(cfg, tone, powers_dbm, C_om, L_delta, noise: float = 0.0, seed: int = 0):
    rng = np.random.default_rng(seed)
    P = np.array([dbm_to_watts(p) for p in powers_dbm])
    n = noise_area_model(P, C_om, cfg)
    t = tone_area_model(P, C_om, cfg, tone, L_delta)
    jitter = 1.0 + noise * rng.standard_normal((2, P.size))
    rel = noise if noise > 0 else 1.0
    return (PowerSweep(P, n * jitter[0], n * rel),
            PowerSweep(P, t * jitter[1], t * rel))
