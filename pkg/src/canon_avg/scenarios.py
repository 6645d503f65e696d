"""Named comparison scenarios: solver output against the oracle and exact solutions.

Each scenario runs one point per small-parameter value, then fits error
orders across the sweep.  Every number lands in a :class:`RunReport` next to
the threshold it is judged against.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erf

from . import averaging as av
from .oracle import error_curve, integrate, l2_distance, sample_times
from .oscillator import DriveProfile, exact_coefficients, exact_expansions, oscillator_problem
from .system import CouplingModel, PerturbationProblem, SpectrumModel, auto_truncation

SCHEMA_VERSION = "1.0"
SQ2 = math.sqrt(2.0)

SCENARIO_NAMES = ("abrupt_field", "two_level", "adiabatic_gaussian", "harmonic_nonresonant", "harmonic_resonant")

DESCRIPTIONS = {
    "abrupt_field": "oscillator in a suddenly applied constant force; second order against the exact state",
    "two_level": "close pair plus a spectator level; closed-form pair dynamics against the oracle",
    "adiabatic_gaussian": "oscillator under a slow Gaussian force pulse; post-adiabatic against exact",
    "harmonic_nonresonant": "oscillator under e1 sin(nu t), nu away from 1; frequency shift and baselines",
    "harmonic_resonant": "oscillator under e1 cos t; ladder closed form and Poisson populations",
}

# per-scenario defaults; anything not listed falls back to the ScenarioConfig default
DEFAULTS: dict[str, dict[str, Any]] = {
    "abrupt_field": {"epsilon": (0.2, 0.1, 0.05), "horizon_mult": 1.0, "min_modes": 12},
    "two_level": {"epsilon": (0.1, 0.05, 0.025), "horizon_mult": 0.0, "g": 1.0, "delta0": 0.0,
                  "spectator": 0.25, "min_modes": 3},
    "adiabatic_gaussian": {"epsilon": (0.2, 0.1, 0.05), "epsilon1": 1.0, "tau0": 7.0, "width": 1.5,
                           "horizon_mult": 14.0, "min_modes": 12},
    "harmonic_nonresonant": {"epsilon1": 0.1, "nu": 2.0, "horizon_mult": 1.0, "fit_window": 600.0,
                             "min_modes": 10},
    "harmonic_resonant": {"epsilon1": 0.005, "nu": 1.0, "horizon_mult": 4.0, "min_modes": 24},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters for one run.

    ``epsilon`` is the sweep of small parameters.  For the harmonic scenarios the
    small parameter is the drive amplitude ``epsilon1``; a single ``epsilon``
    value given there replaces ``epsilon1``.  ``N = 0`` selects the truncation
    rule (initial norm to ``1e-8`` plus four modes, at least ``min_modes``).
    ``horizon_mult`` is ``C_h`` in ``t <= C_h / eps``; ``0`` means one pair
    period for ``two_level``.
    """

    scenario: str
    epsilon: tuple[float, ...] = ()
    epsilon1: float = 1.0
    nu: float = 0.0
    N: int = 0
    horizon_mult: float = 1.0
    tol: float = 1e-10
    output_dir: str = ""
    seed: int = 0
    g: float = 1.0
    delta0: float = 0.0
    spectator: float = 0.0
    tau0: float = 7.0
    width: float = 1.5
    fit_window: float = 600.0
    min_modes: int = 4
    compare: tuple[str, ...] = ()
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIO_NAMES)}")
        eps = tuple(float(e) for e in self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if any(not (0 < e < 1) for e in eps):
            raise ValueError("every epsilon must lie in (0, 1)")
        if len(eps) > 1 and any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon sweep must be strictly decreasing")
        if self.scenario.startswith("harmonic"):
            if not self.nu > 0:
                raise ValueError(f"{self.scenario} requires nu > 0")
            if self.scenario == "harmonic_nonresonant" and abs(self.nu - 1.0) < 1e-9:
                raise ValueError("harmonic_nonresonant needs nu != 1; use harmonic_resonant")
            if self.scenario == "harmonic_resonant" and abs(self.nu - 1.0) > 1e-12:
                raise ValueError("harmonic_resonant is defined at nu = 1")
            if len(eps) > 1:
                raise ValueError(f"{self.scenario} takes a single drive amplitude, not a sweep")
            if not (0 < self.epsilon1 < 1):
                raise ValueError("epsilon1 must lie in (0, 1) for the harmonic scenarios")
        elif not eps:
            raise ValueError(f"{self.scenario} needs at least one epsilon")
        if self.tol <= 0 or self.N < 0 or self.horizon_mult < 0:
            raise ValueError("tol must be positive, N and horizon_mult non-negative")
        bad = set(self.compare) - {"std-pt", "born-fock"}
        if bad:
            raise ValueError(f"unknown comparison(s): {sorted(bad)}")
        object.__setattr__(self, "compare", tuple(sorted(set(self.compare))))

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "ScenarioConfig":
        if scenario not in DEFAULTS:
            raise ValueError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIO_NAMES)}")
        params = dict(DEFAULTS[scenario])
        params.update({k: v for k, v in overrides.items() if v is not None})
        if scenario.startswith("harmonic") and params.get("epsilon"):
            eps = tuple(params.pop("epsilon"))
            if len(eps) == 1:
                params["epsilon1"] = eps[0]
            else:
                params["epsilon"] = eps
        return cls(scenario=scenario, **params)

    def small_parameters(self) -> tuple[float, ...]:
        return (self.epsilon1,) if self.scenario.startswith("harmonic") else self.epsilon

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilon"] = list(self.epsilon)
        d["compare"] = list(self.compare)
        return d


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: float
    tol: float
    mode: str = "abs"  # abs: |value - target| <= tol; rel: tol relative to target; max / min: one-sided bound at target
    epsilon: float | None = None

    def __post_init__(self):
        for name in ("value", "target", "tol"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def passed(self) -> bool:
        return bool(self._judge())

    def _judge(self):
        if not math.isfinite(self.value):
            return False
        if self.mode == "max":
            return self.value <= self.target
        if self.mode == "min":
            return self.value >= self.target
        if self.mode == "rel":
            return abs(self.value - self.target) <= self.tol * abs(self.target)
        return abs(self.value - self.target) <= self.tol

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class RunReport:
    scenario: str
    config: dict
    table: list[dict] = field(default_factory=list)
    slopes: dict[str, float] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    curves: dict[str, tuple[list[str], np.ndarray]] = field(default_factory=dict, repr=False)
    schema_version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "config": self.config,
            "table": self.table,
            "slopes": self.slopes,
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fit_order(sweep: dict[float, float]) -> float:
    """Least-squares slope of ``log error`` against ``log eps``."""
    if len(sweep) < 3:
        raise ValueError("order fit needs at least three sweep points")
    eps = np.array(list(sweep.keys()), float)
    err = np.array(list(sweep.values()), float)
    if np.any(eps <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise ValueError("order fit needs positive finite epsilons and errors")
    if np.unique(eps).size < eps.size:
        raise ValueError("order fit needs distinct epsilons")
    return float(np.polyfit(np.log(eps), np.log(err), 1)[0])


@dataclass
class _Point:
    epsilon: float
    errors: dict[str, float] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    curves: dict[str, tuple[list[str], np.ndarray]] = field(default_factory=dict)
    extra: dict[str, float] = field(default_factory=dict)


def _modes(cfg: ScenarioConfig, c0=None) -> int:
    if cfg.N:
        return cfg.N
    c0 = np.array([1.0]) if c0 is None else c0
    return auto_truncation(c0, minimum=cfg.min_modes)


def _norm_check(traj, eps) -> Check:
    return Check("oracle_norm_drift", traj.norm_drift, 1e-8, 0.0, "max", eps)


def _error_columns(t, curves: dict[str, np.ndarray]):
    names = sorted(curves)
    return ["t"] + names, np.column_stack([t] + [curves[n] for n in names])


def _trace(traj, N_keep: int | None = None):
    N = traj.states.shape[1] if N_keep is None else N_keep
    header = ["t"] + [h for k in range(N) for h in (f"re_c{k}", f"im_c{k}")] + ["norm"]
    st = traj.states[:, :N]
    cols = [traj.times]
    for k in range(N):
        cols += [st[:, k].real, st[:, k].imag]
    cols.append(np.sum(traj.populations, axis=1))
    return header, np.column_stack(cols)


# --- abrupt field ------------------------------------------------------------------


def _abrupt_point(cfg: ScenarioConfig, eps: float) -> _Point:
    N = _modes(cfg)
    drive = DriveProfile.abrupt_constant(eps)
    P = oscillator_problem("abrupt", N, eps, drive)
    avg = av.average_problem(P)
    s1 = av.solve_first_order(P, avg)
    s2 = av.solve_second_order(P, avg)
    T = cfg.horizon_mult / eps
    t = sample_times(T, 1.0)
    traj = integrate(P, T, cfg.tol, t_eval=t)
    exact = exact_coefficients(drive, t, N)
    pt = _Point(eps)
    curves = {
        "order1": l2_distance(exact, s1(t)),
        "order2": l2_distance(exact, s2(t)),
        "oracle_vs_exact": l2_distance(exact, traj.states),
    }
    if "std-pt" in cfg.compare:
        curves["std_pt"] = l2_distance(exact, av.standard_pt_coefficient(P, t))
    pt.errors = {k: float(np.max(v)) for k, v in curves.items() if k != "oracle_vs_exact"}
    coeff_err = float(np.max(np.abs(exact - s2(t))))
    prob = abs(s2.A2[1]) ** 2
    exact_prob = eps * eps * math.exp(-eps * eps / 2) / 2
    shifts = av.frequency_shifts(avg)
    pt.checks = [
        _norm_check(traj, eps),
        Check("oracle_matches_exact", float(np.max(curves["oracle_vs_exact"])), 1e-8, 0.0, "max", eps),
        Check("initial_condition_exact", float(np.max(np.abs(s2(0.0) - P.initial))), 1e-12, 0.0, "max", eps),
        Check("frequency_shift_ground", float(shifts[0]), -eps * eps / 2, 1e-12, "abs", eps),
        Check("transition_probability", prob, exact_prob, 1e-4, "abs", eps),
        Check("coefficients_within_5eps3", coeff_err, 5 * eps ** 3, 0.0, "max", eps),
    ]
    pt.extra = {"transition_probability": float(prob), "coefficient_error": coeff_err}
    pt.curves = {f"errors_eps{eps:g}": _error_columns(t, curves), f"trace_eps{eps:g}": _trace(traj, 4)}
    return pt


# --- two-level -----------------------------------------------------------------------


def two_level_problem(eps: float, g: float = 1.0, delta0: float = 0.0, spectator: float = 0.25) -> PerturbationProblem:
    """Modes (alpha, beta, spectator) at ``(0.5, 0.5 + eps delta0, 1.5)``; the spectator couples to alpha only."""
    w = np.array([0.5, 0.5 + eps * delta0, 1.5])
    v = np.array([[0.0, g, spectator], [np.conj(g), 0.0, 0.0], [spectator, 0.0, 0.0]], complex)
    return PerturbationProblem(SpectrumModel(w), CouplingModel.constant(v), eps, [1.0, 0.0, 0.0])


def _return_time(t, pop, guess):
    """Time of the population maximum nearest ``guess``, refined by a parabola through three samples."""
    window = np.abs(t - guess) <= 0.25 * guess
    idx = np.flatnonzero(window)
    i = idx[np.argmax(pop[idx])]
    if 0 < i < t.size - 1:
        y0, y1, y2 = pop[i - 1], pop[i], pop[i + 1]
        h = t[i + 1] - t[i]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            return t[i] + 0.5 * h * (y0 - y2) / denom
    return t[i]


def _two_level_point(cfg: ScenarioConfig, eps: float) -> _Point:
    P = two_level_problem(eps, cfg.g, cfg.delta0, cfg.spectator)
    sys = av.two_level_reduce(P, (0, 1), cfg.delta0)
    sol = av.two_level_solution(P, sys)
    T = (cfg.horizon_mult / eps) if cfg.horizon_mult else sys.period / eps
    t_return = sys.period / eps
    t_end = max(T, 1.25 * t_return)
    t = sample_times(t_end, 1.0, features=(t_return,), per_period=400)
    traj = integrate(P, t_end, cfg.tol, t_eval=t)
    mask = t <= T * (1 + 1e-12)
    err = l2_distance(traj.states[mask], sol(t[mask]))
    ca, _ = av.two_level_closed_form(sys, sys.period)
    t_star = _return_time(t, traj.populations[:, 0], t_return)
    pt = _Point(eps, errors={"two_level": float(np.max(err))})
    pt.checks = [
        _norm_check(traj, eps),
        Check("closed_form_return", abs(ca) ** 2, 1.0, 1e-12, "abs", eps),
        Check("return_time_slow", eps * t_star, sys.period, 1e-3, "rel", eps),
        # spectator leakage spoils the return at O(eps^2)
        Check("return_population", float(traj.populations[np.argmin(np.abs(t - t_star)), 0]), 1.0, eps * eps / 2, "abs", eps),
    ]
    pt.extra = {"return_time": float(t_star)}
    pt.curves = {f"errors_eps{eps:g}": _error_columns(t[mask], {"two_level": err}), f"trace_eps{eps:g}": _trace(traj)}
    return pt


# --- adiabatic Gaussian pulse ------------------------------------------------------------


def gaussian_kinetic_phase(eps: float, epsilon1: float, tau0: float, width: float, t) -> np.ndarray:
    """Closed form of ``int_0^t xi_dot^2/2`` for ``xi = e1 exp(-((eps t - tau0)/width)^2)``."""
    s = (eps * np.asarray(t, float) - tau0) / width
    s0 = -tau0 / width

    def F(x):
        return -x / 4 * np.exp(-2 * x * x) + math.sqrt(2 * math.pi) / 16 * erf(SQ2 * x)

    return eps * 2 * epsilon1 ** 2 / width * (F(s) - F(s0))


def _adiabatic_point(cfg: ScenarioConfig, eps: float) -> _Point:
    N = _modes(cfg)
    drive = DriveProfile.gaussian_adiabatic(cfg.epsilon1, cfg.tau0, cfg.width)
    P = oscillator_problem("adiabatic", N, eps, drive)
    T = cfg.horizon_mult / eps
    t = sample_times(T, 1.0)
    traj = integrate(P, T, cfg.tol, t_eval=t)
    exact = exact_coefficients(drive, t, N, epsilon=eps)
    s1 = av.solve_first_order(P, c_h=cfg.horizon_mult)
    s2 = av.post_adiabatic(P, c_h=cfg.horizon_mult)
    c2 = s2(t)
    expansion = exact_expansions(drive, t, N, epsilon=eps)
    curves = {
        "order1": l2_distance(exact, s1(t)),
        "order2": l2_distance(exact, c2),
        "expansion_vs_exact": l2_distance(exact, expansion),
        "oracle_vs_exact": l2_distance(exact, traj.states),
    }
    pt = _Point(eps)
    pt.checks = [
        _norm_check(traj, eps),
        Check("oracle_matches_exact", float(np.max(curves["oracle_vs_exact"])), 1e-8, 0.0, "max", eps),
        Check("initial_condition_exact", float(np.max(np.abs(c2[0] - P.initial))), 1e-12, 0.0, "max", eps),
        Check("solver_matches_expansion", float(np.max(np.abs(c2 - expansion))), 1e-8, 0.0, "max", eps),
    ]
    # transition rate xi'(tau)^2/2 peaks one over root two widths past the centre
    rate = minimize_scalar(lambda x: -0.5 * drive.dxi_tau(x) ** 2, bounds=(cfg.tau0, cfg.tau0 + 3 * cfg.width),
                           method="bounded", options={"xatol": 1e-10})
    pt.checks.append(Check("excitation_rate_peak", (rate.x - cfg.tau0) / cfg.width, 1 / SQ2, 0.02, "abs", eps))
    # the oracle's first-excited population peaks there too, up to O(eps) drift
    tau = eps * t
    side = tau >= cfg.tau0
    peak = tau[side][np.argmax(traj.populations[side, 1])]
    pt.extra["oracle_population_peak"] = float((peak - cfg.tau0) / cfg.width)
    if "born-fock" in cfg.compare:
        bf = av.born_fock_coefficient(P, t)
        curves["born_fock"] = l2_distance(exact, bf)
        ratio = c2[:, 0] / bf[:, 0]
        ref = np.exp(1j * gaussian_kinetic_phase(eps, cfg.epsilon1, cfg.tau0, cfg.width, t))
        pt.checks.append(Check("born_fock_missing_phase", float(np.max(np.abs(ratio - ref))), 1e-6, 0.0, "max", eps))
    pt.errors = {k: float(np.max(v)) for k, v in curves.items() if k in ("order1", "order2", "born_fock")}
    pt.curves = {f"errors_eps{eps:g}": _error_columns(t, curves), f"trace_eps{eps:g}": _trace(traj, 4)}
    return pt


# --- harmonic drives ----------------------------------------------------------------------


def _nonresonant_point(cfg: ScenarioConfig, e1: float) -> _Point:
    N = _modes(cfg)
    nu = cfg.nu
    drive = DriveProfile.sinusoidal(e1, nu)
    P = oscillator_problem("harmonic_nonresonant", N, e1, drive)
    avg = av.average_problem(P)
    s2 = av.solve_second_order(P, avg)
    s1 = av.solve_first_order(P, avg)
    shift = float(av.frequency_shifts(avg)[0])
    formula = e1 * e1 / (4 * (nu * nu - 1))
    T = max(cfg.fit_window, cfg.horizon_mult / e1)
    t = sample_times(T, 1.0 + nu)
    traj = integrate(P, T, cfg.tol, t_eval=t)
    slope = float(np.polyfit(t, np.unwrap(np.angle(traj.states[:, 0])), 1)[0])
    H = cfg.horizon_mult / e1
    mask = t <= H * (1 + 1e-12)
    tm = t[mask]
    curves = {"order1": l2_distance(traj.states[mask], s1(tm)), "order2": l2_distance(traj.states[mask], s2(tm))}
    k = e1 * nu / (SQ2 * (nu * nu - 1))
    hf = av.frequency_shifts(av.average_problem(oscillator_problem(
        "harmonic_nonresonant", N, e1, DriveProfile.sinusoidal(e1, 50.0))))[0]
    pt = _Point(e1)
    pt.checks = [
        _norm_check(traj, e1),
        Check("oracle_matches_exact", float(np.max(l2_distance(traj.states, exact_coefficients(drive, t, N)))),
              1e-8, 0.0, "max", e1),
        Check("phase_slope_vs_formula", slope, -formula, 0.05, "rel", e1),
        Check("solver_shift_vs_phase_slope", shift, -slope, 0.05, "rel", e1),
        Check("high_frequency_shift_nu50", float(hf), e1 * e1 / (4 * 50.0 ** 2), 0.01, "rel", e1),
        Check("second_order_constant", float(np.abs(s2.A2[1] - 1j * k)), 0.0, 1e-12, "abs", e1),
        Check("initial_condition_exact", float(np.max(np.abs(s2(0.0) - P.initial))), 1e-12, 0.0, "max", e1),
    ]
    if "std-pt" in cfg.compare:
        std = av.standard_pt_coefficient(P, tm)
        curves["std_pt"] = l2_distance(traj.states[mask], std)
        deficit = float(np.max(np.abs(av.standard_pt_coefficient(P, 0.0) - P.initial)))
        sup_ratio = float(np.max(curves["std_pt"]) / np.max(curves["order2"]))
        end_ratio = float(curves["std_pt"][-1] / curves["order2"][-1])
        pt.checks += [
            Check("std_pt_initial_deficit", deficit, abs(k), 1e-12, "abs", e1),
            Check("std_pt_sup_error_ratio", sup_ratio, 5.0, 0.0, "min", e1),
            Check("std_pt_error_ratio_at_horizon", end_ratio, 5.0, 0.0, "min", e1),
        ]
    pt.errors = {k_: float(np.max(v)) for k_, v in curves.items()}
    pt.extra = {"phase_slope": slope, "solver_shift": shift}
    pt.curves = {f"errors_eps{e1:g}": _error_columns(tm, curves), f"trace_eps{e1:g}": _trace(traj, 4)}
    return pt


def _resonant_point(cfg: ScenarioConfig, e1: float) -> _Point:
    N = _modes(cfg)
    drive = DriveProfile.sinusoidal(e1, 1.0, math.pi / 2)
    P = oscillator_problem("harmonic_resonant", N, e1, drive)
    T = cfg.horizon_mult / e1
    t = sample_times(T, 2.0)
    traj = integrate(P, T, cfg.tol, t_eval=t)
    ladder = av.resonant_ladder_solve(e1, 0.0, t, N)
    pops = np.abs(ladder) ** 2
    w = np.array([av.poisson_probabilities(e1, ti, N) for ti in t])
    pt = _Point(e1, errors={"ladder": float(np.max(l2_distance(traj.states, ladder)))})
    pt.checks = [
        _norm_check(traj, e1),
        Check("oracle_matches_exact", float(np.max(l2_distance(traj.states, exact_coefficients(drive, t, N)))),
              1e-8, 0.0, "max", e1),
        Check("population_error_vs_oracle", float(np.max(np.abs(traj.populations - pops))), 1e-3, 0.0, "max", e1),
        Check("ladder_is_poisson", float(np.max(np.abs(pops - w))), 1e-12, 0.0, "max", e1),
        Check("poisson_normalization", float(np.max(np.abs(np.sum(w, axis=1) - 1.0))), 1e-12, 0.0, "max", e1),
    ]
    pt.curves = {
        f"populations_eps{e1:g}": (["t"] + [f"oracle_w{k}" for k in range(4)] + [f"ladder_w{k}" for k in range(4)],
                                   np.column_stack([t, traj.populations[:, :4], pops[:, :4]])),
        f"trace_eps{e1:g}": _trace(traj, 6),
    }
    return pt


_POINT = {
    "abrupt_field": _abrupt_point,
    "two_level": _two_level_point,
    "adiabatic_gaussian": _adiabatic_point,
    "harmonic_nonresonant": _nonresonant_point,
    "harmonic_resonant": _resonant_point,
}

# expected error orders per method, judged as slope within +-0.25
_ORDERS = {
    "abrupt_field": {"order1": 1.0, "order2": 2.0},
    "two_level": {"two_level": 1.0},
    "adiabatic_gaussian": {"order1": 1.0, "order2": 2.0},
}


def _run_point(args):
    cfg, eps = args
    return _POINT[cfg.scenario](cfg, eps)


def run(cfg: ScenarioConfig) -> RunReport:
    params = cfg.small_parameters()
    jobs = [(cfg, e) for e in params]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            points = list(pool.map(_run_point, jobs))
    else:
        points = [_run_point(j) for j in jobs]
    report = RunReport(cfg.scenario, cfg.to_dict())
    for p in points:
        row = {"epsilon": p.epsilon}
        row.update({f"sup_error_{k}": v for k, v in sorted(p.errors.items())})
        row.update(sorted(p.extra.items()))
        report.table.append(row)
        report.checks.extend(p.checks)
        report.curves.update(p.curves)
    if len(points) >= 3:
        for method, order in _ORDERS.get(cfg.scenario, {}).items():
            sweep = {p.epsilon: p.errors[method] for p in points}
            s = fit_order(sweep)
            report.slopes[method] = s
            report.checks.append(Check(f"order_slope_{method}", s, order, 0.25, "abs"))
    return report


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


def config_fields() -> list[str]:
    return [f.name for f in fields(ScenarioConfig)]
