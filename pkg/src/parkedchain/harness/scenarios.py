"""Seeded end-to-end experiment runners emitting CSV-ready tables.

Each scenario maps a simulation question onto one table with a fixed
column schema:

  arrival-histogram     hour, count, fraction
  reputation-decay      slot, scheme, honest, misbehaving
  detection-rate        slot, sl_rate, lr_rate
  collusion             threshold, sl_correct, lr_correct
  contract-feasibility  type, theta, item, u_pv, is_choice
  utility-vs-hour       hour, scheme, u_sr, u_pv
  utility-vs-type       type, theta, beta, scheme, f_hz, pi, u_pv, u_sr_term

Tables are deterministic functions of (config, seed): rerunning writes
byte-identical CSV.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import contract_opt, parking
from ..consensus import collusion_experiment, detection_experiment
from ..reputation import LinearReputationTracker, ReputationEngine, WeightConfig
from .config import ExperimentConfig, config_digest

__all__ = ["ResultTable", "SCENARIOS", "run_scenario"]

SCENARIOS = (
    "arrival-histogram",
    "reputation-decay",
    "detection-rate",
    "collusion",
    "contract-feasibility",
    "utility-vs-hour",
    "utility-vs-type",
)

SCHEME_ORDER = ("LC", "LIA", "LA", "SA", "linear")


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple]
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.provenance:
            raise ValueError("a result table must carry provenance")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match columns")

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")

    def provenance_text(self) -> str:
        return "".join(f"{k}={self.provenance[k]}\n"
                       for k in sorted(self.provenance))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _provenance(name: str, cfg: ExperimentConfig) -> dict[str, str]:
    from .. import __version__
    return {
        "scenario": name,
        "config": config_digest(cfg),
        "seed": str(cfg.seed),
        "version": __version__,
    }


def run_scenario(name: str, cfg: ExperimentConfig) -> ResultTable:
    try:
        runner = _RUNNERS[name]
    except KeyError:
        raise ValueError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}"
        ) from None
    return runner(cfg)


# -- population plumbing -----------------------------------------------------

def _mixture() -> parking.GammaMixtureParams:
    return parking.GammaMixtureParams()


def _records(cfg: ExperimentConfig):
    """Arrival records from the configured trace, else the synthetic
    bimodal population (flagged via the provenance 'source' key)."""
    if cfg.trace_path is not None:
        hist, records = parking.ingest_trace(cfg.trace_path)
        return hist, records, f"trace:{cfg.trace_path}"
    records = parking.synthesize_population(_mixture(), cfg.arrivals, cfg.seed)
    hist = [0] * 24
    for rec in records:
        hist[rec.hour % 24] += 1
    return hist, records, "synthetic"


def _task_params(cfg: ExperimentConfig) -> contract_opt.TaskParams:
    r = tuple(cfg.r_bps) if isinstance(cfg.r_bps, (tuple, list)) else cfg.r_bps
    return contract_opt.TaskParams(
        rho=cfg.rho, kappa=cfg.kappa, s_bits=cfg.s_bits, f_local=cfg.f_local,
        r_bps=r, eps_cap=cfg.eps_cap, e_price=cfg.e_price, f_max=cfg.f_max,
    )


def _hour_problem(cfg: ExperimentConfig, records, hour: int) -> contract_opt.ContractProblem:
    profile = parking.hourly_type_profile(records, hour, _mixture(), cfg.n_types)
    return contract_opt.ContractProblem(profile, _task_params(cfg))


def _solve_all(problem: contract_opt.ContractProblem) -> dict[str, contract_opt.ContractMenu]:
    return {
        "LC": contract_opt.solve_complete_info(problem),
        "LIA": contract_opt.solve_lagrangian_iterative(problem),
        "LA": contract_opt.solve_local_asymmetric(problem),
        "SA": contract_opt.stackelberg_baseline(problem)[0],
        "linear": contract_opt.linear_pricing_baseline(problem)[0],
    }


# -- scenarios ----------------------------------------------------------------

def _arrival_histogram(cfg: ExperimentConfig) -> ResultTable:
    hist, records, source = _records(cfg)
    total = len(records)
    rows = [(hour, hist[hour], hist[hour] / total) for hour in range(24)]
    prov = _provenance("arrival-histogram", cfg)
    prov["source"] = source
    return ResultTable(("hour", "count", "fraction"), rows, prov)


def _reputation_decay(cfg: ExperimentConfig) -> ResultTable:
    """Mean reputation of honest vs misbehaving cohorts, slot by slot.

    The misbehaving cohort cooperates at 0.8 until the onset slot, then
    drops to 0.1; honest nodes hold 0.8 throughout. Both schemes score
    the identical interaction stream.
    """
    slots = cfg.consensus.slots
    onset = min(5, slots)
    raters = [f"r{i:03d}" for i in range(10)]
    bad = [f"m{i:03d}" for i in range(cfg.misbehaving)]
    n_honest = max(1, min(10, cfg.population - cfg.misbehaving - len(raters)))
    honest = [f"h{i:03d}" for i in range(n_honest)]

    weight_cfg = WeightConfig(*cfg.gammas, *cfg.alphas)
    engine = ReputationEngine(weight_cfg)
    tracker = LinearReputationTracker()
    for i, node in enumerate(raters):
        engine.register(node, arrival_hour=9 + (i % 3))
    for i, node in enumerate(bad + honest):
        engine.register(node, arrival_hour=9 + (i % 3))

    rng = np.random.default_rng(cfg.seed)
    rows: list[tuple] = []
    for slot in range(slots):
        for target in bad + honest:
            p = 0.8 if (target in honest or slot < onset) else 0.1
            for rater in raters:
                trials = int(rng.integers(5, 11))
                pos = int(rng.binomial(trials, p))
                engine.record_outcomes(slot, rater, target, pos, trials - pos)
                tracker.update(rater, target, pos, trials - pos)
        for scheme, score in (
            ("SL", lambda t: engine.average_reputation(t, at=slot + 1, raters=raters)),
            ("LR", lambda t: tracker.average_reputation(t, raters=raters)),
        ):
            rows.append((
                slot, scheme,
                float(np.mean([score(t) for t in honest])),
                float(np.mean([score(t) for t in bad])),
            ))
    return ResultTable(("slot", "scheme", "honest", "misbehaving"), rows,
                       _provenance("reputation-decay", cfg))


def _detection_rate(cfg: ExperimentConfig) -> ResultTable:
    weight_cfg = WeightConfig(*cfg.gammas, *cfg.alphas)
    common = dict(
        population=cfg.population, misbehaving_count=cfg.misbehaving,
        threshold=cfg.consensus.threshold, slots=cfg.consensus.slots,
        seed=cfg.seed, weight_config=weight_cfg,
    )
    sl = detection_experiment(scheme="SL", **common)
    lr = detection_experiment(scheme="LR", **common)
    rows = [(slot, sl[slot], lr[slot]) for slot in range(len(sl))]
    return ResultTable(("slot", "sl_rate", "lr_rate"), rows,
                       _provenance("detection-rate", cfg))


def _collusion(cfg: ExperimentConfig) -> ResultTable:
    thresholds = [round(0.05 * k, 2) for k in range(1, 13)]
    rows = []
    for th in thresholds:
        sl = collusion_experiment(th, "SL", seeds=cfg.collusion_seeds,
                                  seed_base=cfg.seed)
        lr = collusion_experiment(th, "LR", seeds=cfg.collusion_seeds,
                                  seed_base=cfg.seed)
        rows.append((th, sl, lr))
    return ResultTable(("threshold", "sl_correct", "lr_correct"), rows,
                       _provenance("collusion", cfg))


def _contract_feasibility(cfg: ExperimentConfig) -> ResultTable:
    """Self-selection table: utility of every (true type, menu item) pair."""
    _, records, _ = _records(cfg)
    problem = _hour_problem(cfg, records, cfg.profile_hour)
    menu = contract_opt.solve_lagrangian_iterative(problem)
    rows = []
    for j, theta in enumerate(problem.profile.thetas):
        utilities = [
            contract_opt.pv_utility(theta, f, pi, problem.params)
            for f, pi in menu.items
        ]
        # bunched items are byte-identical, so ties mark every copy
        best = max(utilities)
        for k, u in enumerate(utilities):
            rows.append((j + 1, theta, k + 1, u, u == best))
    prov = _provenance("contract-feasibility", cfg)
    prov["hour"] = str(cfg.profile_hour)
    return ResultTable(("type", "theta", "item", "u_pv", "is_choice"), rows, prov)


def _utility_vs_hour(cfg: ExperimentConfig) -> ResultTable:
    _, records, _ = _records(cfg)
    rows = []
    for hour in range(24):
        problem = _hour_problem(cfg, records, hour)
        menus = _solve_all(problem)
        for scheme in SCHEME_ORDER:
            menu = menus[scheme]
            rows.append((
                hour, scheme,
                contract_opt.sr_expected_utility(menu, problem),
                contract_opt.pv_expected_utility(menu, problem),
            ))
    return ResultTable(("hour", "scheme", "u_sr", "u_pv"), rows,
                       _provenance("utility-vs-hour", cfg))


def _utility_vs_type(cfg: ExperimentConfig) -> ResultTable:
    _, records, _ = _records(cfg)
    problem = _hour_problem(cfg, records, cfg.profile_hour)
    menus = _solve_all(problem)
    rows = []
    for scheme in SCHEME_ORDER:
        menu = menus[scheme]
        terms = contract_opt.sr_utility_terms(menu, problem)
        for j, (theta, beta) in enumerate(
            zip(problem.profile.thetas, problem.profile.betas)
        ):
            f, pi = menu.fs[j], menu.pis[j]
            rows.append((
                j + 1, theta, beta, scheme, f, pi,
                contract_opt.pv_utility(theta, f, pi, problem.params),
                terms[j],
            ))
    prov = _provenance("utility-vs-type", cfg)
    prov["hour"] = str(cfg.profile_hour)
    return ResultTable(
        ("type", "theta", "beta", "scheme", "f_hz", "pi", "u_pv", "u_sr_term"),
        rows, prov,
    )


_RUNNERS = {
    "arrival-histogram": _arrival_histogram,
    "reputation-decay": _reputation_decay,
    "detection-rate": _detection_rate,
    "collusion": _collusion,
    "contract-feasibility": _contract_feasibility,
    "utility-vs-hour": _utility_vs_hour,
    "utility-vs-type": _utility_vs_type,
}
