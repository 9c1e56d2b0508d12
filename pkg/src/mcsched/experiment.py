"""Parameter sweeps comparing coordination regimes and solvers.

A sweep varies one dimension (U, Z, B or C), draws one network instance per
(value, seed), runs every requested solver and records one CSV row per
(value, seed, solver, regime). Aggregates (mean and standard error) are
recomputed from the raw rows, never tracked separately.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .conflict import Regime, build_graph, validate_schedule
from .distributed import run_heuristic_distributed, run_optimal_distributed
from .errors import ConfigurationError, InfeasibleError, UsageError
from .mwis import exact_mwis, greedy_mwis
from .network import ChannelParams, Dimensions, compute_utilities, generate_instance

CSV_HEADER = ("sweep_var", "value", "seed", "solver", "regime", "sum_rate_bpshz",
              "rounds", "messages", "feasible", "wall_ms")
SUMMARY_HEADER = ("sweep_var", "value", "solver", "regime", "n", "n_feasible",
                  "mean_sum_rate", "stderr_sum_rate", "mean_rounds", "mean_messages")

SOLVERS = ("centralized-exact", "centralized-greedy", "distributed-optimal", "distributed-heuristic")
CENTRALIZED = ("centralized-exact", "centralized-greedy")
SWEEP_FIELDS = {"U": "users", "Z": "pzs_per_bs", "B": "bs_per_cloud", "C": "clouds"}
DEFAULT_BUDGET = 250


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: the swept variable, its values, fixed dimensions and trials.

    With ``users_per_cloud`` set, the user count follows the cloud count
    (U = users_per_cloud * C) and users are dropped inside their cloud's cell.
    ``budget`` caps the vertex count handed to the exact solver.
    """

    sweep_var: str
    values: tuple[int, ...]
    dims: Dimensions
    seeds: tuple[int, ...]
    regimes: tuple[Regime, ...] = tuple(Regime)
    solvers: tuple[str, ...] = ("centralized-exact",)
    params: ChannelParams = field(default_factory=ChannelParams)
    users_per_cloud: int | None = None
    budget: int = DEFAULT_BUDGET
    timing: bool = True
    workers: int = 1
    name: str = ""
    output: Path | None = None

    def __post_init__(self) -> None:
        if self.sweep_var not in SWEEP_FIELDS:
            raise ConfigurationError(f"sweep variable must be one of {sorted(SWEEP_FIELDS)}, got {self.sweep_var!r}")
        if not self.values or any(int(v) < 1 for v in self.values):
            raise ConfigurationError("sweep values must be a non-empty list of positive integers")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown or not self.solvers:
            raise ConfigurationError(f"unknown solver(s) {sorted(unknown)}; choose from {SOLVERS}")
        if not self.regimes:
            raise ConfigurationError("at least one regime is required")
        if self.users_per_cloud is not None and self.users_per_cloud < 1:
            raise ConfigurationError("users_per_cloud must be positive")
        if self.budget < 1 or self.workers < 1:
            raise ConfigurationError("budget and workers must be positive")
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "regimes", tuple(Regime.parse(r) for r in self.regimes))
        object.__setattr__(self, "solvers", tuple(s for s in SOLVERS if s in self.solvers))
        if self.users_per_cloud is not None and not self.params.users_per_cloud:
            object.__setattr__(self, "params", replace(self.params, users_per_cloud=True))
        for _, dims in self.configurations():
            self._check_budget(dims)

    def configurations(self) -> list[tuple[int, Dimensions]]:
        out = []
        for v in self.values:
            dims = replace(self.dims, **{SWEEP_FIELDS[self.sweep_var]: v})
            if self.users_per_cloud is not None:
                dims = replace(dims, users=self.users_per_cloud * dims.clouds)
            out.append((v, dims))
        return out

    def _check_budget(self, dims: Dimensions) -> None:
        full = dims.clouds * dims.users * dims.bs_per_cloud * dims.pzs_per_bs
        local = dims.users * dims.bs_per_cloud * dims.pzs_per_bs
        if "centralized-exact" in self.solvers and full > self.budget:
            raise ConfigurationError(
                f"{dims}: exact search over {full} vertices exceeds the budget of {self.budget}; "
                "use centralized-greedy or the distributed solvers, or raise --budget")
        distributed = {"distributed-optimal", "distributed-heuristic"} & set(self.solvers)
        if distributed and local > self.budget:
            raise ConfigurationError(
                f"{dims}: local exact search over {local} vertices exceeds the budget of {self.budget}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], base_dir: Path | None = None) -> "ExperimentSpec":
        data = dict(data)
        try:
            sweep = data.pop("sweep")
            dims = Dimensions(**data.pop("dims"))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"experiment spec needs 'sweep' and 'dims': {exc}") from None
        seeds = data.pop("seeds", {"count": 100, "start": 0})
        if isinstance(seeds, Mapping):
            seeds = range(int(seeds.get("start", 0)), int(seeds.get("start", 0)) + int(seeds.get("count", 100)))
        output = data.pop("output", None)
        if output is not None:
            output = Path(output)
            if base_dir is not None and not output.is_absolute():
                output = base_dir / output
        kwargs = dict(
            sweep_var=str(sweep["var"]).upper(),
            values=tuple(sweep["values"]),
            dims=dims,
            seeds=tuple(seeds),
            params=ChannelParams.from_mapping(data.pop("channel", {}) or {}),
            output=output,
        )
        for key in ("regimes", "solvers"):
            if key in data:
                kwargs[key] = tuple(data.pop(key))
        for key in ("users_per_cloud", "budget", "workers"):
            if key in data:
                kwargs[key] = int(data.pop(key))
        if "timing" in data:
            kwargs["timing"] = bool(data.pop("timing"))
        kwargs["name"] = str(data.pop("name", ""))
        if data:
            raise ConfigurationError(f"unknown experiment spec key(s): {sorted(data)}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentSpec":
        import yaml

        path = Path(path)
        with open(path) as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: expected a mapping at top level")
        return cls.from_mapping(data, base_dir=path.parent)


@dataclass(frozen=True)
class ResultRow:
    sweep_var: str
    value: int
    seed: int
    solver: str
    regime: str
    sum_rate_bpshz: float | None
    rounds: int
    messages: int
    feasible: bool
    wall_ms: float | None

    def as_csv(self) -> list[str]:
        return [
            self.sweep_var, str(self.value), str(self.seed), self.solver, self.regime,
            "" if self.sum_rate_bpshz is None else repr(self.sum_rate_bpshz),
            str(self.rounds), str(self.messages), "true" if self.feasible else "false",
            "" if self.wall_ms is None else f"{self.wall_ms:.3f}",
        ]


def _combos(spec: ExperimentSpec) -> list[tuple[str, Regime]]:
    combos = []
    for solver in spec.solvers:
        if solver in CENTRALIZED:
            combos += [(solver, r) for r in spec.regimes]
        else:
            combos.append((solver, Regime.HYBRID))
    return combos


def run_trial(spec: ExperimentSpec, value: int, dims: Dimensions, seed: int) -> list[ResultRow]:
    """All solver rows for one (sweep value, seed) pair."""
    combos = _combos(spec)

    def row(solver, regime, rate, rounds, messages, feasible, wall):
        return ResultRow(spec.sweep_var, value, seed, solver, regime.value, rate, rounds, messages,
                         feasible, wall if spec.timing else None)

    if not dims.is_schedulable():
        return [row(s, r, None, 0, 0, False, None) for s, r in combos]

    utilities = compute_utilities(generate_instance(seed, dims, spec.params))
    graphs: dict[Regime, Any] = {}
    rows = []
    for solver, regime in combos:
        start = time.perf_counter()
        rounds = messages = 0
        try:
            if solver in CENTRALIZED:
                if regime not in graphs:
                    graphs[regime] = build_graph(utilities, regime)
                g = graphs[regime]
                result = exact_mwis(g) if solver == "centralized-exact" else greedy_mwis(g)
                schedule, rate = result.schedule, result.weight
            else:
                run = run_optimal_distributed if solver == "distributed-optimal" else run_heuristic_distributed
                result = run(utilities)
                schedule, rate = result.schedule, result.weight
                rounds, messages = result.rounds, len(result.messages)
        except InfeasibleError:
            rows.append(row(solver, regime, None, rounds, messages, False, (time.perf_counter() - start) * 1e3))
            continue
        wall = (time.perf_counter() - start) * 1e3
        feasible = validate_schedule(schedule, dims, regime).feasible
        rows.append(row(solver, regime, rate, rounds, messages, feasible, wall))
    return rows


def _trial_task(args):
    return run_trial(*args)


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Run every (value, seed) trial and write the CSV if ``spec.output`` is set.

    Rows come back ordered by (value, seed) regardless of ``workers``.
    """
    tasks = [(spec, v, dims, s) for v, dims in spec.configurations() for s in spec.seeds]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_trial_task, tasks))
    else:
        chunks = [run_trial(*t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    order = {s: i for i, s in enumerate(SOLVERS)}
    rank = {r.value: i for i, r in enumerate(Regime)}
    rows.sort(key=lambda r: (r.value, r.seed, order[r.solver], rank[r.regime]))
    if spec.output is not None:
        write_results(rows, spec.output)
    return rows


def results_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(r.as_csv())
    return buf.getvalue()


def write_results(rows: Iterable[ResultRow], path: str | Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(results_to_csv(rows))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path: str | Path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise UsageError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            ResultRow(
                sweep_var=rec["sweep_var"], value=int(rec["value"]), seed=int(rec["seed"]),
                solver=rec["solver"], regime=rec["regime"],
                sum_rate_bpshz=float(rec["sum_rate_bpshz"]) if rec["sum_rate_bpshz"] else None,
                rounds=int(rec["rounds"]), messages=int(rec["messages"]),
                feasible=rec["feasible"] == "true",
                wall_ms=float(rec["wall_ms"]) if rec["wall_ms"] else None,
            )
            for rec in reader
        ]


@dataclass(frozen=True)
class SummaryRow:
    sweep_var: str
    value: int
    solver: str
    regime: str
    n: int
    n_feasible: int
    mean_sum_rate: float
    stderr_sum_rate: float
    mean_rounds: float
    mean_messages: float

    def as_csv(self) -> list[str]:
        return [self.sweep_var, str(self.value), self.solver, self.regime, str(self.n),
                str(self.n_feasible), repr(self.mean_sum_rate), repr(self.stderr_sum_rate),
                repr(self.mean_rounds), repr(self.mean_messages)]


def summarize(rows: Sequence[ResultRow]) -> list[SummaryRow]:
    """Mean and standard error of the sum-rate over feasible trials per point."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.sweep_var, r.value, r.solver, r.regime), []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], SOLVERS.index(k[2]), k[3])):
        group = groups[key]
        ok = [r for r in group if r.feasible and r.sum_rate_bpshz is not None]
        rates = [r.sum_rate_bpshz for r in ok]
        mean = math.fsum(rates) / len(rates) if rates else math.nan
        stderr = statistics.stdev(rates) / math.sqrt(len(rates)) if len(rates) > 1 else (0.0 if rates else math.nan)
        out.append(SummaryRow(
            *key, n=len(group), n_feasible=len(ok), mean_sum_rate=mean, stderr_sum_rate=stderr,
            mean_rounds=math.fsum(r.rounds for r in group) / len(group),
            mean_messages=math.fsum(r.messages for r in group) / len(group),
        ))
    return out


def summary_to_csv(summary: Iterable[SummaryRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(SUMMARY_HEADER)
    for s in summary:
        writer.writerow(s.as_csv())
    return buf.getvalue()


def mean_by(summary: Iterable[SummaryRow], solver: str = "centralized-exact") -> dict[str, dict[int, float]]:
    """``{regime: {value: mean sum-rate}}`` for one solver."""
    out: dict[str, dict[int, float]] = {}
    for s in summary:
        if s.solver == solver:
            out.setdefault(s.regime, {})[s.value] = s.mean_sum_rate
    return out


def emit_plots(rows: Sequence[ResultRow], outdir: str | Path) -> list[Path]:
    """One sum-rate plot per swept variable plus its summary CSV; returns written paths."""
    if not rows:
        raise UsageError("cannot plot an empty result table")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = summarize(rows)
    written = []
    for var in sorted({s.sweep_var for s in summary}):
        part = [s for s in summary if s.sweep_var == var]
        csv_path = outdir / f"sweep_{var}.csv"
        csv_path.write_text(summary_to_csv(part))
        fig, ax = plt.subplots(figsize=(6, 4))
        series: dict[tuple[str, str], list[SummaryRow]] = {}
        for s in part:
            series.setdefault((s.solver, s.regime), []).append(s)
        for (solver, regime), pts in series.items():
            pts = [p for p in sorted(pts, key=lambda p: p.value) if not math.isnan(p.mean_sum_rate)]
            if not pts:
                continue
            ax.errorbar([p.value for p in pts], [p.mean_sum_rate for p in pts],
                        yerr=[p.stderr_sum_rate for p in pts], marker="o", capsize=3,
                        label=f"{solver} ({regime})")
        ax.set_xticks(sorted({s.value for s in part}))
        ax.set_xlabel({"U": "users U", "Z": "power zones per BS Z",
                       "B": "base stations per cloud B", "C": "clouds C"}[var])
        ax.set_ylabel("sum-rate [bit/s/Hz]")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        png_path = outdir / f"sweep_{var}.png"
        fig.savefig(png_path, dpi=120)
        plt.close(fig)
        written += [png_path, csv_path]
    return written


# Desk-scale analogues of the four sweeps, and full-size variants that skip
# the centralized exact solver.
_DESK = {
    "users": dict(sweep_var="U", values=(4, 6, 8, 10, 12), dims=Dimensions(2, 2, 3, 6)),
    "zones": dict(sweep_var="Z", values=(1, 2, 3), dims=Dimensions(2, 2, 3, 6)),
    "stations": dict(sweep_var="B", values=(1, 2, 3), dims=Dimensions(2, 2, 3, 6)),
    "clouds": dict(sweep_var="C", values=(1, 2, 3), dims=Dimensions(2, 2, 3, 8), users_per_cloud=4),
}
_FULL = {
    "users": dict(sweep_var="U", values=(10, 15, 20, 25, 30), dims=Dimensions(3, 3, 5, 24)),
    "zones": dict(sweep_var="Z", values=(1, 2, 3, 4, 5), dims=Dimensions(3, 3, 5, 24)),
    "stations": dict(sweep_var="B", values=(1, 2, 3, 4, 5), dims=Dimensions(3, 3, 5, 24)),
    "clouds": dict(sweep_var="C", values=(1, 2, 3, 4, 5), dims=Dimensions(3, 3, 5, 24), users_per_cloud=8),
}
PRESETS = tuple(_DESK)


def preset(name: str, *, full_scale: bool = False, seeds: Sequence[int] | None = None,
           budget: int | None = None, **overrides) -> ExperimentSpec:
    """Built-in sweep ``name`` (one of :data:`PRESETS`)."""
    table = _FULL if full_scale else _DESK
    if name not in table:
        raise UsageError(f"unknown preset {name!r}; choose from {PRESETS}")
    kwargs: dict[str, Any] = dict(table[name])
    if full_scale:
        kwargs["solvers"] = ("centralized-greedy", "distributed-optimal", "distributed-heuristic")
        kwargs["budget"] = 2000
    else:
        kwargs["solvers"] = ("centralized-exact", "distributed-optimal", "distributed-heuristic")
    kwargs["seeds"] = tuple(seeds) if seeds is not None else tuple(range(100))
    if budget is not None:
        kwargs["budget"] = budget
    kwargs["name"] = f"{name}{'-full' if full_scale else ''}"
    kwargs.update(overrides)
    return ExperimentSpec(**kwargs)
