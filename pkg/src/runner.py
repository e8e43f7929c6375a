import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import pandas as pd

from .config import SCHEMA_VERSION, ToleranceConfig
from .cq_model import CCQState, CQState, coarsen, marginal_x, marginal_y, realize, sum_pushforward
from .entropy_functionals import cmi_estimate, entropy_X_given_M
from .fisher import fisher_at_time
from .heat_flow import heat_evolve_cq
from .inequality_suite import (
    EntropyTriple,
    FisherTriple,
    InequalityReport,
    Verdict,
    check_asymptotic,
    check_concavity,
    check_epi,
    check_linear_epi,
    check_linear_stam,
    check_mi_chain,
    check_phi_flow,
    check_stam,
    entropy_triple,
    fisher_triple,
    phi_flow,
)
from .scenarios import DEFAULT_T_GRID, DEFAULT_T_LIST, CheckSpec, ScenarioConfig, build_states
from .validator import EpiqError, FisherInconclusive, config_error

logger = logging.getLogger(__name__)

QUANTITIES = ("entropy_flow", "fisher_flow", "phi")
TARGETS = ("x", "y", "sum")
DEFAULT_LAMBDAS = [0.0, 0.25, 0.5, 0.75, 1.0]

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3


@dataclass
class RunReport:
    scenario: Dict
    reports: List[InequalityReport] = field(default_factory=list)
    quantities: List[Dict] = field(default_factory=list)
    errors: List[Dict] = field(default_factory=list)
    traces: List[Dict] = field(default_factory=list)
    wall_clock: float = 0.0
    seed: Optional[int] = None
    schema_version: int = SCHEMA_VERSION

    def count(self, verdict: Verdict) -> int:
        return sum(1 for r in self.reports if r.verdict == verdict)

    @property
    def exit_code(self) -> int:
        if self.errors or self.count(Verdict.FAIL):
            return EXIT_FAIL
        if self.count(Verdict.INCONCLUSIVE):
            return EXIT_INCONCLUSIVE
        return EXIT_PASS

    def summary(self) -> Dict:
        return {
            "checks": len(self.reports),
            "passed": self.count(Verdict.PASS),
            "failed": self.count(Verdict.FAIL),
            "inconclusive": self.count(Verdict.INCONCLUSIVE),
            "errors": len(self.errors),
            "exit_code": self.exit_code,
        }

    def body(self) -> Dict:
        """Everything except the timing fields."""
        return {
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "seed": self.seed,
            "reports": [r.to_dict() for r in self.reports],
            "quantities": self.quantities,
            "errors": self.errors,
            "traces": self.traces,
            "summary": self.summary(),
        }

    def to_dict(self) -> Dict:
        data = self.body()
        data["wall_clock"] = self.wall_clock
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "RunReport":
        return cls(
            scenario=data["scenario"],
            reports=[InequalityReport.from_dict(r) for r in data.get("reports", [])],
            quantities=data.get("quantities", []),
            errors=data.get("errors", []),
            traces=data.get("traces", []),
            wall_clock=data.get("wall_clock", 0.0),
            seed=data.get("seed"),
            schema_version=data.get("schema_version", SCHEMA_VERSION),
        )


class StateContext:
    """One realized state plus the entropy and Fisher values shared by its checks."""

    def __init__(self, label: str, state: CCQState, tolerance: ToleranceConfig, seed: int):
        self.label = label
        self.state = state
        self.tolerance = tolerance
        self.seed = seed
        self._triple: Optional[EntropyTriple] = None
        self._fisher: Optional[FisherTriple] = None
        self.traces: List[Dict] = []

    def triple(self) -> EntropyTriple:
        if self._triple is None:
            self._triple = entropy_triple(self.state)
        return self._triple

    def fisher(self) -> FisherTriple:
        if self._fisher is None:
            self._fisher = fisher_triple(self.state)
        return self._fisher

    def target(self, name: str) -> CQState:
        if name == "x":
            return marginal_x(self.state)
        if name == "y":
            return marginal_y(self.state)
        if name == "sum":
            return sum_pushforward(self.state)
        raise config_error("checks.params.target", f"target must be one of {TARGETS}", name)

    def quantity_rows(self) -> List[Dict]:
        rows = [{"state": self.label, "quantity": "I(X:Y|M)", **cmi_estimate(self.state).to_dict()}]
        if self._triple is not None:
            t, c = self._triple, self._triple.coarse
            for name, value, coarse in (("S(X|M)", t.x, c.x), ("S(Y|M)", t.y, c.y), ("S(X+Y|M)", t.total, c.total)):
                rows.append({"state": self.label, "quantity": name, "value": value, "error_bar": abs(value - coarse)})
        if self._fisher is not None:
            f = self._fisher
            for name, est in (("J(X|M)", f.x), ("J(Y|M)", f.y), ("J(X+Y|M)", f.total)):
                rows.append({"state": self.label, "quantity": name, "value": est.value,
                             "error_bar": est.error_estimate})
        return rows


def _fisher_report(build: Callable[[], InequalityReport]) -> InequalityReport:
    """An inconclusive Fisher check is recorded as a verdict, not as an error."""
    try:
        return build()
    except FisherInconclusive as e:
        if e.report is None:
            raise
        logger.warning("%s", e)
        return e.report


def run_check(check: CheckSpec, ctx: StateContext) -> List[InequalityReport]:
    s, tol, seed, params = ctx.state, ctx.tolerance, ctx.seed, check.params
    if check.name == "epi":
        return [check_epi(s, tol, seed, triple=ctx.triple())]
    if check.name == "linear_epi":
        return [check_linear_epi(s, lam, tol, seed, triple=ctx.triple()) for lam in check.lambdas(DEFAULT_LAMBDAS)]
    if check.name == "stam":
        return [_fisher_report(lambda: check_stam(s, tol, seed, fisher=ctx.fisher()))]
    if check.name == "linear_stam":
        return [_fisher_report(lambda lam=lam: check_linear_stam(s, lam, tol, seed, fisher=ctx.fisher()))
                for lam in check.lambdas(DEFAULT_LAMBDAS)]
    if check.name == "mi_chain":
        reports = []
        for lam in check.lambdas([0.5]):
            for t in check.times("t_values", [0.05, 0.1]):
                reports.extend(check_mi_chain(s, lam, t, tol, seed))
        return reports
    if check.name == "concavity":
        target = ctx.target(params.get("target", "x"))
        return [check_concavity(target, check.times("t_grid", DEFAULT_T_GRID), tol, seed)]
    if check.name == "asymptotic":
        target = ctx.target(params.get("target", "x"))
        return [check_asymptotic(target, check.times("t_list", DEFAULT_T_LIST), tol, seed)]
    if check.name == "phi":
        reports = []
        for lam in check.lambdas([0.5]):
            trace = check_phi_flow(s, lam, check.times("t_grid", DEFAULT_T_GRID), params.get("spot_times"),
                                   tol, seed)
            reports.extend(trace.reports)
            flow = trace.to_dict()
            flow.pop("reports")
            flow["state"] = ctx.label
            ctx.traces.append(flow)
        return reports
    raise config_error("checks.name", f"unknown check '{check.name}'", check.name)


def _tag(reports: List[InequalityReport], label: str) -> List[InequalityReport]:
    for report in reports:
        report.details["state"] = label
    return reports


def run_verify(scenario: Union[ScenarioConfig, Dict]) -> RunReport:
    """Realize the scenario's states and run every listed check on each of them.

    A check that raises is recorded on the report with its error type; the
    remaining checks still run.
    """
    if isinstance(scenario, dict):
        scenario = ScenarioConfig.from_dict(scenario)
    start = time.perf_counter()
    tolerance = scenario.tolerance_config()
    seed = scenario.effective_seed
    report = RunReport(scenario=scenario.to_dict(), seed=seed)

    print(f"1. Building states for '{scenario.name}'...")
    states = build_states(scenario)
    print(f"   {len(states)} state(s)")

    print(f"2. Running {len(scenario.checks)} check(s)...")
    for label, structured in states:
        ctx = StateContext(label, realize(structured), tolerance, seed)
        for check in scenario.checks:
            try:
                report.reports.extend(_tag(run_check(check, ctx), label))
            except (EpiqError, AssertionError) as e:
                error = e.to_dict() if isinstance(e, EpiqError) else {
                    "error_type": "INTERNAL_CONSISTENCY", "field": None, "message": str(e), "raw_value": None,
                }
                error.update({"check": check.name, "state": label})
                report.errors.append(error)
                logger.error("%s / %s: %s", label, check.name, e)
        report.quantities.extend(ctx.quantity_rows())
        report.traces.extend(ctx.traces)

    report.wall_clock = time.perf_counter() - start
    summary = report.summary()
    print(f"3. Verdicts: {summary['passed']} pass, {summary['failed']} fail, "
          f"{summary['inconclusive']} inconclusive, {summary['errors']} error(s)")
    mark = "✓" if report.exit_code == EXIT_PASS else "✗"
    print(f"\n{mark} {scenario.name} finished in {report.wall_clock:.2f}s")
    return report


def _entropy_with_error(s: CQState, t: float) -> tuple:
    value = entropy_X_given_M(heat_evolve_cq(s, t))
    coarse = entropy_X_given_M(heat_evolve_cq(coarsen(s), t))
    return value, abs(value - coarse)


def run_sweep(
        scenario: Union[ScenarioConfig, Dict],
        quantity: str,
        t_grid: Sequence[float],
        lam: float = 0.5,
        target: str = "x"
) -> pd.DataFrame:
    """One row per t (t, value, error_bar) for the first state of the scenario."""
    if isinstance(scenario, dict):
        scenario = ScenarioConfig.from_dict(scenario)
    if quantity not in QUANTITIES:
        raise config_error("quantity", f"quantity must be one of {QUANTITIES}", quantity)
    times = [float(t) for t in t_grid]
    if not times:
        raise config_error("t_grid", "sweep needs at least one time")
    if min(times) < 0.0:
        raise config_error("t_grid", "sweep times must be nonnegative", times)

    label, structured = build_states(scenario)[0]
    ctx = StateContext(label, realize(structured), scenario.tolerance_config(), scenario.effective_seed)
    print(f"Sweeping {quantity} on '{label}' over {len(times)} time(s)...")

    if quantity == "entropy_flow":
        state = ctx.target(target)
        rows = [(t,) + _entropy_with_error(state, t) for t in times]
    elif quantity == "fisher_flow":
        state = ctx.target(target)
        rows = []
        for t in times:
            est = fisher_at_time(state, t)
            rows.append((t, est.value, est.error_estimate))
    else:
        if len(times) < 2:
            raise config_error("t_grid", "a phi sweep needs at least two times", times)
        trace = phi_flow(ctx.state, lam, times, ctx.tolerance)
        coarse = phi_flow(coarsen(ctx.state), lam, times, ctx.tolerance)
        rows = [(t, v, abs(v - c)) for t, v, c in zip(trace.t, trace.phi, coarse.phi)]
    return pd.DataFrame(rows, columns=["t", "value", "error_bar"])


def quantities_frame(report: RunReport) -> pd.DataFrame:
    return pd.DataFrame(report.quantities, columns=["state", "quantity", "value", "error_bar"])


def reports_frame(report: RunReport) -> pd.DataFrame:
    rows = [{
        "state": r.details.get("state", ""),
        "check": r.name,
        "verdict": r.verdict.value,
        "lhs": r.lhs,
        "rhs": r.rhs,
        "deficit": r.deficit,
        "tolerance": r.tolerance,
        "error_bar": r.error_bar,
    } for r in report.reports]
    return pd.DataFrame(rows, columns=["state", "check", "verdict", "lhs", "rhs", "deficit", "tolerance",
                                       "error_bar"])

