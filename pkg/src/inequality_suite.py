import logging
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import expit, xlogy

from .config import config, ToleranceConfig
from .cq_model import (
    CCQState,
    CIBlock,
    CQState,
    Grid,
    StateFamilySpec,
    StructuredCIState,
    coarsen,
    gaussian_density,
    marginal_x,
    marginal_y,
    sum_pushforward,
)
from .entropy_functionals import Estimate, cmi, cmi_estimate, cmi_with_noise, entropy_X_given_M, entropy_XY_given_M
from .fisher import FisherEstimate, fisher_at_time, fisher_debruijn, noise_bundle
from .heat_flow import (
    HeatParams,
    heat_evolve_ccq_direction,
    heat_evolve_cq,
    lattice_direction,
)
from .validator import FisherInconclusive, InvalidParameters, NotConditionallyIndependent

logger = logging.getLogger(__name__)


class Verdict(Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def decide_verdict(deficit: float, tolerance: float, error_bar: float) -> Verdict:
    """Pass within tolerance; a larger violation inside the error bar is inconclusive."""
    if deficit >= -tolerance:
        return Verdict.PASS
    if abs(deficit) < error_bar:
        return Verdict.INCONCLUSIVE
    return Verdict.FAIL


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    deficit: float
    tolerance: float
    verdict: Verdict
    error_bar: float = 0.0
    grid: Dict = field(default_factory=dict)
    details: Dict = field(default_factory=dict)
    seed: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["verdict"] = self.verdict.value
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "InequalityReport":
        data = dict(data)
        data["verdict"] = Verdict(data["verdict"])
        return cls(**data)


def make_report(
        name: str,
        lhs: float,
        rhs: float,
        deficit: float,
        tolerance: float,
        error_bar: float = 0.0,
        grid: Dict = None,
        details: Dict = None,
        seed: int = None
) -> InequalityReport:
    deficit, error_bar = float(deficit), float(error_bar)
    return InequalityReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        deficit=deficit,
        tolerance=float(tolerance),
        verdict=decide_verdict(deficit, tolerance, error_bar),
        error_bar=error_bar,
        grid=grid or {},
        details=dict(details or {}),
        seed=seed,
    )


@dataclass
class FlowTrace:
    t: List[float]
    sum_entropies: List[float]
    x_entropies: List[float]
    y_entropies: List[float]
    phi: List[float]
    phi_prime: List[float]
    lam: float
    limit: float
    reports: List[InequalityReport] = field(default_factory=list)

    def __post_init__(self):
        lengths = {len(self.t), len(self.sum_entropies), len(self.x_entropies),
                   len(self.y_entropies), len(self.phi), len(self.phi_prime)}
        if len(lengths) != 1:
            raise InvalidParameters("flow trace columns have different lengths", field="t")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise InvalidParameters("flow trace times must be strictly increasing", field="t", raw_value=self.t)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["reports"] = [r.to_dict() for r in self.reports]
        return data


@dataclass
class EntropyTriple:
    x: float
    y: float
    total: float
    n: int = 1
    coarse: Optional["EntropyTriple"] = None


@dataclass
class FisherTriple:
    x: FisherEstimate
    y: FisherEstimate
    total: FisherEstimate


def mixing_term(lam: float, n: int = 1) -> float:
    """-n (lam ln lam + (1 - lam) ln(1 - lam)) / 2, with 0 ln 0 = 0."""
    return float(-0.5 * n * (xlogy(lam, lam) + xlogy(1.0 - lam, 1.0 - lam)))


def _grid_meta(s: CCQState) -> Dict:
    meta = s.grid.to_dict()
    meta["dim"] = s.dim
    meta["coverage_warning"] = bool(s.joint.coverage_warning)
    return meta


def require_conditional_independence(s: CCQState, tolerance: ToleranceConfig = None) -> Estimate:
    """I(X:Y|M) with its grid-halving error bar; raises when the value exceeds the CI tolerance."""
    tol = tolerance or config.tolerance
    info = cmi_estimate(s)
    if info.value > tol.ci:
        raise NotConditionallyIndependent(
            f"I(X:Y|M) = {info.value:.3e} exceeds {tol.ci:.0e}", field="state", raw_value=info.value
        )
    return info


def _cmi_details(info: Estimate) -> Dict:
    return {"cmi": info.value, "cmi_error_bar": info.error_bar}


def _triple(s: CCQState) -> EntropyTriple:
    return EntropyTriple(
        x=entropy_X_given_M(marginal_x(s)),
        y=entropy_X_given_M(marginal_y(s)),
        total=entropy_X_given_M(sum_pushforward(s)),
        n=s.grid_x.n,
    )


def entropy_triple(s: CCQState, with_error: bool = True) -> EntropyTriple:
    """S(X|M), S(Y|M), S(X+Y|M), optionally with the same triple on the halved grid."""
    triple = _triple(s)
    if with_error:
        triple.coarse = _triple(coarsen(s))
    return triple


def epi_deficit(triple: EntropyTriple) -> float:
    """(n/2) ln of the entropy-power ratio; >= 0 when the EPI holds."""
    n = triple.n
    return triple.total - 0.5 * n * np.logaddexp(2.0 * triple.x / n, 2.0 * triple.y / n)


def linear_epi_deficit(triple: EntropyTriple, lam: float) -> float:
    rhs = lam * triple.x + (1.0 - lam) * triple.y + mixing_term(lam, triple.n)
    return triple.total - rhs


def optimal_lambda(triple: EntropyTriple) -> float:
    return float(expit(2.0 * (triple.x - triple.y) / triple.n))


def check_epi(
        s: CCQState,
        tolerance: ToleranceConfig = None,
        seed: int = None,
        triple: EntropyTriple = None
) -> InequalityReport:
    tol = tolerance or config.tolerance
    info = require_conditional_independence(s, tol)
    triple = triple or entropy_triple(s)
    n = triple.n

    deficit = epi_deficit(triple)
    error_bar = abs(deficit - epi_deficit(triple.coarse)) if triple.coarse else 0.0
    lhs = math.exp(2.0 * triple.total / n)
    rhs = math.exp(2.0 * triple.x / n) + math.exp(2.0 * triple.y / n)

    lam_star = optimal_lambda(triple)
    linear_at_star = linear_epi_deficit(triple, lam_star)
    if abs(linear_at_star - deficit) > tol.consistency:
        raise AssertionError(
            f"linear EPI at lambda*={lam_star:.6f} gives {linear_at_star:.9f}, EPI log-ratio gives {deficit:.9f}"
        )

    return make_report(
        "epi", lhs, rhs, deficit, tol.entropic, error_bar, _grid_meta(s),
        {
            "S_X_given_M": triple.x,
            "S_Y_given_M": triple.y,
            "S_sum_given_M": triple.total,
            **_cmi_details(info),
            "relative_deficit": (lhs - rhs) / rhs,
            "lambda_star": lam_star,
            "linear_deficit_at_lambda_star": linear_at_star,
        },
        seed,
    )


def check_linear_epi(
        s: CCQState,
        lam: float,
        tolerance: ToleranceConfig = None,
        seed: int = None,
        triple: EntropyTriple = None
) -> InequalityReport:
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameters(f"lambda must lie in [0, 1], got {lam}", field="lambda", raw_value=lam)
    tol = tolerance or config.tolerance
    info = require_conditional_independence(s, tol)
    triple = triple or entropy_triple(s)

    deficit = linear_epi_deficit(triple, lam)
    error_bar = abs(deficit - linear_epi_deficit(triple.coarse, lam)) if triple.coarse else 0.0
    rhs = triple.total - deficit
    return make_report(
        f"linear_epi[lambda={lam:g}]", triple.total, rhs, deficit, tol.entropic, error_bar, _grid_meta(s),
        {"lambda": lam, **_cmi_details(info), "mixing_term": mixing_term(lam, triple.n),
         "lambda_star": optimal_lambda(triple)},
        seed,
    )


def fisher_triple(s: CCQState) -> FisherTriple:
    return FisherTriple(
        x=fisher_debruijn(marginal_x(s)),
        y=fisher_debruijn(marginal_y(s)),
        total=fisher_debruijn(sum_pushforward(s)),
    )


def _require_positive(fisher: FisherTriple):
    for label, est in (("X", fisher.x), ("Y", fisher.y), ("X+Y", fisher.total)):
        if est.value <= est.error_estimate:
            raise FisherInconclusive(
                f"J({label}|M) = {est.value:.4g} is not positive beyond its error {est.error_estimate:.3g}",
                field=label, raw_value=est.value
            )


def _fisher_details(fisher: FisherTriple) -> Dict:
    return {
        "J_X_given_M": fisher.x.value,
        "J_Y_given_M": fisher.y.value,
        "J_sum_given_M": fisher.total.value,
        "J_errors": [fisher.x.error_estimate, fisher.y.error_estimate, fisher.total.error_estimate],
    }


def _settle_fisher(report: InequalityReport) -> InequalityReport:
    if report.verdict == Verdict.INCONCLUSIVE:
        raise FisherInconclusive(
            f"{report.name}: deficit {report.deficit:.4g} lies within its error bar {report.error_bar:.3g}",
            field="deficit", raw_value=report.deficit, report=report
        )
    return report


def check_stam(
        s: CCQState,
        tolerance: ToleranceConfig = None,
        seed: int = None,
        fisher: FisherTriple = None
) -> InequalityReport:
    """1/J(X+Y|M) >= 1/J(X|M) + 1/J(Y|M).

    The linear form at lambda = J(Y|M) / (J(X|M) + J(Y|M)) must reproduce the
    harmonic deficit. Raises FisherInconclusive, with the report attached,
    when the deficit lies inside its propagated error bar.
    """
    tol = tolerance or config.tolerance
    info = require_conditional_independence(s, tol)
    fisher = fisher or fisher_triple(s)
    _require_positive(fisher)
    jx, jy, js = fisher.x.value, fisher.y.value, fisher.total.value

    lhs, rhs = 1.0 / js, 1.0 / jx + 1.0 / jy
    deficit = lhs - rhs
    error_bar = (fisher.x.error_estimate / jx ** 2 + fisher.y.error_estimate / jy ** 2
                 + fisher.total.error_estimate / js ** 2)

    lam_opt = jy / (jx + jy)
    linear_rhs = lam_opt ** 2 * jx + (1.0 - lam_opt) ** 2 * jy
    linear_deficit = linear_rhs - js
    # linear_rhs = 1 / rhs, so the two deficits differ by the factor js * linear_rhs
    if abs(linear_deficit - deficit * js * linear_rhs) > tol.consistency:
        raise AssertionError(
            f"linear Stam at lambda={lam_opt:.6f} gives {linear_deficit:.9g}, "
            f"harmonic form implies {deficit * js * linear_rhs:.9g}"
        )

    details = _fisher_details(fisher)
    details.update({
        **_cmi_details(info),
        "lambda_opt": lam_opt,
        "linear_rhs_at_lambda_opt": linear_rhs,
        "linear_deficit_at_lambda_opt": linear_deficit,
    })
    report = make_report("stam", lhs, rhs, deficit, tol.fisher_relative * rhs, error_bar, _grid_meta(s),
                         details, seed)
    return _settle_fisher(report)


def check_linear_stam(
        s: CCQState,
        lam: float,
        tolerance: ToleranceConfig = None,
        seed: int = None,
        fisher: FisherTriple = None
) -> InequalityReport:
    """J(X+Y|M) <= lam^2 J(X|M) + (1 - lam)^2 J(Y|M)."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameters(f"lambda must lie in [0, 1], got {lam}", field="lambda", raw_value=lam)
    tol = tolerance or config.tolerance
    info = require_conditional_independence(s, tol)
    fisher = fisher or fisher_triple(s)
    _require_positive(fisher)
    jx, jy, js = fisher.x.value, fisher.y.value, fisher.total.value

    rhs = lam ** 2 * jx + (1.0 - lam) ** 2 * jy
    error_bar = (lam ** 2 * fisher.x.error_estimate + (1.0 - lam) ** 2 * fisher.y.error_estimate
                 + fisher.total.error_estimate)
    details = _fisher_details(fisher)
    details.update({"lambda": lam, **_cmi_details(info)})
    report = make_report(f"linear_stam[lambda={lam:g}]", js, rhs, rhs - js, tol.fisher_relative * rhs, error_bar,
                         _grid_meta(s), details, seed)
    return _settle_fisher(report)


def _chain_lines(s: CCQState, lam: float, t: float) -> Dict[str, float]:
    mx, my, total = marginal_x(s), marginal_y(s), sum_pushforward(s)
    cmi_xy = cmi(s)

    def growth(state: CQState, time: float) -> float:
        return entropy_X_given_M(heat_evolve_cq(state, time)) - entropy_X_given_M(state)

    shared = heat_evolve_ccq_direction(s, t, lam)
    i_u = growth(mx, lam ** 2 * t)
    i_v = growth(my, (1.0 - lam) ** 2 * t)
    cmi_uv = cmi(shared)
    return {
        "A": growth(total, t),
        "B": entropy_XY_given_M(shared) - entropy_XY_given_M(s),
        "C": i_u + i_v + cmi_xy - cmi_uv,
        "D": i_u + i_v + cmi_xy,
        "E": i_u + i_v,
        "I_U_Z": i_u,
        "I_V_Z": i_v,
        "I_U_V": cmi_uv,
        "I_X_Y": cmi_xy,
    }


def _lines_at_zero(s: CCQState, lam: float) -> Dict[str, float]:
    """Every chain line at t = 0, with the noise terms also read off zero-time noise bundles."""
    lines = _chain_lines(s, lam, 0.0)
    lines.update({
        "A_bundle": cmi_with_noise(noise_bundle(sum_pushforward(s), 0.0)),
        "I_U_Z_bundle": cmi_with_noise(noise_bundle(marginal_x(s), 0.0)),
        "I_V_Z_bundle": cmi_with_noise(noise_bundle(marginal_y(s), 0.0)),
    })
    return lines


def _chain_relations(lines: Dict[str, float]) -> Dict[str, tuple]:
    # name -> (lhs, rhs, deficit)
    a, b, c, d, e = (lines[k] for k in "ABCDE")
    return {
        "mi_chain_data_processing": (a, b, b - a),
        "mi_chain_chain_rule": (b, c, -abs(b - c)),
        "mi_chain_positivity": (c, d, d - c),
        "mi_chain_conditional_independence": (d, e, -abs(d - e)),
    }


def check_mi_chain(
        s: CCQState,
        lam: float,
        t: float,
        tolerance: ToleranceConfig = None,
        seed: int = None
) -> List[InequalityReport]:
    """The four-line mutual-information chain behind the linear Stam inequality."""
    HeatParams(t)
    lattice_direction(lam)
    tol = tolerance or config.tolerance
    require_conditional_independence(s, tol)

    lines = _chain_lines(s, lam, t)
    coarse_lines = _chain_lines(coarsen(s), lam, t)
    fine, coarse = _chain_relations(lines), _chain_relations(coarse_lines)
    meta = _grid_meta(s)
    suffix = f"[lambda={lam:g},t={t:g}]"

    reports = []
    for name, (lhs, rhs, deficit) in fine.items():
        reports.append(make_report(
            name + suffix, lhs, rhs, deficit, tol.chain, abs(deficit - coarse[name][2]), meta,
            {"lambda": lam, "t": t, "lines": lines}, seed,
        ))

    start = _lines_at_zero(s, lam)
    worst = max(abs(v) for v in start.values())
    reports.append(make_report(
        "mi_chain_vanishing" + suffix, start["A"], start["E"], -worst, tol.vanishing, 0.0, meta,
        {"lambda": lam, "lines_at_zero": start}, seed,
    ))
    return reports


def _check_uniform_grid(t_grid: Sequence[float], min_points: int) -> np.ndarray:
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size < min_points:
        raise InvalidParameters(f"time grid needs at least {min_points} points", field="t_grid",
                                raw_value=list(times.ravel()))
    steps = np.diff(times)
    if steps.min() <= 0.0 or times.min() < 0.0:
        raise InvalidParameters("time grid must be nonnegative and strictly increasing", field="t_grid",
                                raw_value=times.tolist())
    if np.abs(steps - steps.mean()).max() > 1e-9 * max(1.0, times[-1]):
        raise InvalidParameters("time grid must be uniform", field="t_grid", raw_value=times.tolist())
    return times


def entropy_curve(s: CQState, times: Sequence[float]) -> np.ndarray:
    return np.array([entropy_X_given_M(heat_evolve_cq(s, float(t))) for t in times])


def check_concavity(
        s: CQState,
        t_grid: Sequence[float],
        tolerance: ToleranceConfig = None,
        seed: int = None
) -> InequalityReport:
    """Second differences of t -> S(X_t|M) stay below tolerance."""
    tol = tolerance or config.tolerance
    times = _check_uniform_grid(t_grid, 5)
    curve = entropy_curve(s, times)
    second = curve[2:] - 2.0 * curve[1:-1] + curve[:-2]
    coarse_curve = entropy_curve(coarsen(s), times)
    coarse_second = coarse_curve[2:] - 2.0 * coarse_curve[1:-1] + coarse_curve[:-2]

    worst = float(second.max())
    return make_report(
        "concavity", worst, 0.0, -worst, tol.concavity, abs(worst - float(coarse_second.max())),
        s.grid.to_dict(), {"t": times.tolist(), "entropy": curve.tolist(), "second_differences": second.tolist()},
        seed,
    )


def check_asymptotic(
        s: CQState,
        t_list: Sequence[float],
        tolerance: ToleranceConfig = None,
        seed: int = None
) -> InequalityReport:
    """S(X_t|M) - (n/2) ln(2 pi e t) decays to zero along the heat flow."""
    tol = tolerance or config.tolerance
    times = np.asarray(t_list, dtype=float)
    if times.size < 2 or np.diff(times).min() <= 0.0 or times[0] <= 0.0:
        raise InvalidParameters("t_list must be positive and increasing", field="t_list", raw_value=list(t_list))
    if times[-1] / times[0] < 100.0:
        raise InvalidParameters("t_list must span at least two decades", field="t_list", raw_value=list(t_list))
    n = s.grid.n
    reference = 0.5 * n * np.log(2.0 * np.pi * np.e * times)
    residuals = entropy_curve(s, times) - reference
    coarse_residuals = entropy_curve(coarsen(s), times) - reference

    def deficit_of(res: np.ndarray) -> float:
        magnitude = np.abs(res)
        decay = float((magnitude[:-1] - magnitude[1:]).min())
        return min(tol.asymptotic - magnitude[-1], decay)

    deficit = deficit_of(residuals)
    return make_report(
        "asymptotic", abs(residuals[-1]), tol.asymptotic, deficit, tol.consistency,
        abs(deficit - deficit_of(coarse_residuals)), s.grid.to_dict(),
        {"t": times.tolist(), "residuals": residuals.tolist()}, seed,
    )


def _phi_columns(s: CCQState, lam: float, times: np.ndarray) -> Dict[str, np.ndarray]:
    mx, my, total = marginal_x(s), marginal_y(s), sum_pushforward(s)
    sums = entropy_curve(total, times)
    xs = entropy_curve(mx, lam * times) if lam > 0.0 else np.zeros_like(times)
    ys = entropy_curve(my, (1.0 - lam) * times) if lam < 1.0 else np.zeros_like(times)
    return {"sum": sums, "x": xs, "y": ys, "phi": sums - lam * xs - (1.0 - lam) * ys}


def phi_flow(s: CCQState, lam: float, t_grid: Sequence[float], tolerance: ToleranceConfig = None) -> FlowTrace:
    """phi(t) = S(X+Y+sqrt(t)Z|M) - lam S(X+sqrt(lam t)Z1|M) - (1-lam) S(Y+sqrt((1-lam)t)Z2|M)."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameters(f"lambda must lie in [0, 1], got {lam}", field="lambda", raw_value=lam)
    require_conditional_independence(s, tolerance)
    times = np.asarray(t_grid, dtype=float)
    if times.size < 2 or np.diff(times).min() <= 0.0 or times[0] < 0.0:
        raise InvalidParameters("t_grid must be nonnegative, strictly increasing, >= 2 points",
                                field="t_grid", raw_value=list(t_grid))
    columns = _phi_columns(s, lam, times)
    return FlowTrace(
        t=times.tolist(),
        sum_entropies=columns["sum"].tolist(),
        x_entropies=columns["x"].tolist(),
        y_entropies=columns["y"].tolist(),
        phi=columns["phi"].tolist(),
        phi_prime=np.gradient(columns["phi"], times).tolist(),
        lam=lam,
        limit=mixing_term(lam, s.grid_x.n),
    )


def _max_slope(times: np.ndarray, phi: np.ndarray) -> float:
    return float((np.diff(phi) / np.diff(times)).max())


def _phi_prime_from_fisher(s: CCQState, lam: float, t: float) -> tuple:
    total = fisher_at_time(sum_pushforward(s), t)
    value, error, scale = total.value, total.error_estimate, total.value
    if lam > 0.0:
        fx = fisher_at_time(marginal_x(s), lam * t)
        value -= lam ** 2 * fx.value
        error += lam ** 2 * fx.error_estimate
        scale += lam ** 2 * fx.value
    if lam < 1.0:
        fy = fisher_at_time(marginal_y(s), (1.0 - lam) * t)
        value -= (1.0 - lam) ** 2 * fy.value
        error += (1.0 - lam) ** 2 * fy.error_estimate
        scale += (1.0 - lam) ** 2 * fy.value
    return value, error, scale


def check_phi_flow(
        s: CCQState,
        lam: float,
        t_grid: Sequence[float],
        spot_times: Sequence[float] = None,
        tolerance: ToleranceConfig = None,
        seed: int = None
) -> FlowTrace:
    tol = tolerance or config.tolerance
    trace = phi_flow(s, lam, t_grid, tol)
    times, phi = np.asarray(trace.t), np.asarray(trace.phi)
    coarse_phi = _phi_columns(coarsen(s), lam, times)["phi"]
    meta = _grid_meta(s)
    details = {"lambda": lam, "limit": trace.limit}
    suffix = f"[lambda={lam:g}]"

    slope = _max_slope(times, phi)
    trace.reports.append(make_report(
        "phi_monotone" + suffix, slope, 0.0, -slope, tol.slope, abs(slope - _max_slope(times, coarse_phi)),
        meta, details, seed,
    ))

    drop, coarse_drop = phi[0] - phi[-1], coarse_phi[0] - coarse_phi[-1]
    trace.reports.append(make_report(
        "phi_endpoints" + suffix, phi[0], phi[-1], drop, tol.entropic, abs(drop - coarse_drop), meta, details, seed,
    ))

    gap = phi[-1] - trace.limit
    trace.reports.append(make_report(
        "phi_limit" + suffix, phi[-1], trace.limit, gap, tol.asymptotic, abs(phi[-1] - coarse_phi[-1]),
        meta, details, seed,
    ))

    if times[0] == 0.0:
        # phi(0) - limit is the linear EPI deficit at the same lambda
        trace.reports.append(make_report(
            "phi_linear_epi" + suffix, phi[0], trace.limit, phi[0] - trace.limit, tol.asymptotic,
            abs(phi[0] - coarse_phi[0]), meta, details, seed,
        ))

    if spot_times is None:
        spot_times = [times[len(times) // 2]] if len(times) >= 3 else []
    for spot in spot_times:
        index = int(np.argmin(np.abs(times - spot)))
        if index == 0 or index == len(times) - 1:
            logger.warning("phi cross-check time %.4g is not interior to the t grid; skipped", spot)
            continue
        fisher_value, fisher_error, scale = _phi_prime_from_fisher(s, lam, float(times[index]))
        measured = trace.phi_prime[index]
        trace.reports.append(make_report(
            f"phi_fisher_crosscheck[lambda={lam:g},t={times[index]:g}]", measured, fisher_value,
            -abs(measured - fisher_value), tol.fisher_relative * scale, fisher_error, meta,
            {"lambda": lam, "t": float(times[index])}, seed,
        ))
    return trace


def _random_family(rng: np.random.Generator, dim: int) -> StateFamilySpec:
    if dim == 1:
        return StateFamilySpec("constant", {"dim": 1})
    suite = config.suite
    return StateFamilySpec("qubit_bloch", {
        "alpha": float(rng.uniform(*suite.bloch_alpha)),
        "beta": float(rng.uniform(*suite.bloch_beta)),
        "gamma": float(rng.uniform(-np.pi, np.pi)),
        "mu": float(rng.uniform(*suite.bloch_mu)),
        "profile": "arctan",
    })


def _random_gaussian(rng: np.random.Generator, grid: Grid):
    suite = config.suite
    return gaussian_density(float(rng.uniform(*suite.mean_range)), float(rng.uniform(*suite.variance_range)), grid)


def random_structured_suite(
        seed: int,
        draws: int,
        grid_x: Grid,
        grid_y: Grid = None
) -> List[StructuredCIState]:
    """Seeded structured states: 1 or 2 blocks, block dims up to 2 x 2, qubit_bloch factors."""
    grid_y = grid_y or grid_x
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(draws):
        n_blocks = int(rng.integers(1, 3))
        weights = rng.dirichlet(np.ones(n_blocks)) if n_blocks > 1 else np.ones(1)
        blocks = []
        for weight in weights:
            dim_x, dim_y = (int(d) for d in rng.integers(1, 3, size=2))
            blocks.append(CIBlock(
                weight=float(weight),
                density_x=_random_gaussian(rng, grid_x),
                density_y=_random_gaussian(rng, grid_y),
                family_x=_random_family(rng, dim_x),
                family_y=_random_family(rng, dim_y),
            ))
        states.append(StructuredCIState(blocks))
    return states
