"""Cartesian experiment grids over SimConfig axes, run serially or in worker processes."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..adversary import ConfigError
from ..sim.engine import Metrics, SimConfig, run_trial

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentGrid:
    n_values: tuple[int, ...]
    f_values: tuple[float, ...]
    seeds: tuple[int, ...]
    num_sends: int = 10_000
    check_variant: int = 1
    strategy: str = "always-corrupt"
    force_check: bool = False
    placement: str = "balanced"
    baseline: bool = False
    baseline_sends: int | None = None
    self_healing: bool = True
    out_dir: str | None = None
    window: int = 1000
    workers: int = 1

    def __post_init__(self):
        for name in ("n_values", "f_values", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if not (self.baseline or self.self_healing):
            raise ConfigError("grid runs neither baseline nor self-healing trials")
        if self.window < 1:
            raise ConfigError("window must be at least 1")
        # surface bad axis values before any trial starts
        self.configs()

    def configs(self) -> list[SimConfig]:
        out = []
        for n in self.n_values:
            for f in self.f_values:
                for seed in self.seeds:
                    base = SimConfig(
                        n=n, f=f, check_variant=self.check_variant, num_sends=self.num_sends,
                        seed=seed, strategy=self.strategy, force_check=self.force_check,
                        placement=self.placement,
                    )
                    if self.self_healing:
                        out.append(base)
                    if self.baseline:
                        out.append(replace(base, baseline=True, num_sends=self.baseline_sends or self.num_sends))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("n_values", "f_values", "seeds"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentGrid":
        d = dict(d)
        for k in ("n_values", "f_values", "seeds"):
            if k in d:
                d[k] = tuple(d[k])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None


def trial_tag(c: SimConfig) -> str:
    kind = "baseline" if c.baseline else "selfheal"
    return f"{kind}_n{c.n}_f{c.f:.6g}_c{c.check_variant}_s{c.seed}"


@dataclass
class GridResult:
    grid: ExperimentGrid
    trials: dict[str, Metrics] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)

    def series(self, n: int, f: float, baseline: bool) -> list[Metrics]:
        return [
            m for m in self.trials.values()
            if m.config.n == n and m.config.f == f and m.config.baseline == baseline
        ]

    def aggregates(self) -> list[dict]:
        rows = []
        for n in self.grid.n_values:
            for f in self.grid.f_values:
                row: dict = {"n": n, "f": f}
                sh = self.series(n, f, False)
                bl = self.series(n, f, True)
                if sh:
                    row["selfheal_mean_messages"] = float(np.mean([m.mean_messages() for m in sh]))
                    row["selfheal_steady_messages"] = float(np.mean([m.final_quartile_mean() for m in sh]))
                    row["selfheal_corruptions"] = float(np.mean([m.total_corruptions for m in sh]))
                    row["selfheal_updates"] = float(np.mean([m.update_count for m in sh]))
                    row["t"] = sh[0].t
                if bl:
                    row["baseline_mean_messages"] = float(np.mean([m.mean_messages() for m in bl]))
                    row["baseline_corruptions"] = float(np.mean([m.total_corruptions for m in bl]))
                if sh and bl:
                    row["reduction_factor"] = row["baseline_mean_messages"] / row["selfheal_steady_messages"]
                rows.append(row)
        return rows

    def summary(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "aggregates": self.aggregates(),
            "trials": {k: self.trials[k].summary() for k in sorted(self.trials)},
            "failures": dict(sorted(self.failures.items())),
        }


def _run_one(config: SimConfig) -> Metrics:
    return run_trial(config)


def run_grid(grid: ExperimentGrid) -> GridResult:
    """Run every trial of the grid; a failing trial is recorded and the rest continue."""
    configs = grid.configs()
    result = GridResult(grid)
    if grid.workers > 1:
        with ProcessPoolExecutor(max_workers=grid.workers) as pool:
            futures = [(c, pool.submit(_run_one, c)) for c in configs]
            outcomes = []
            for c, fut in futures:
                try:
                    outcomes.append((c, fut.result(), None))
                except Exception as e:  # noqa: BLE001 - recorded per trial
                    outcomes.append((c, None, e))
    else:
        outcomes = []
        for c in configs:
            try:
                outcomes.append((c, _run_one(c), None))
            except Exception as e:  # noqa: BLE001
                outcomes.append((c, None, e))
    for c, m, err in outcomes:
        tag = trial_tag(c)
        if err is not None:
            log.warning("trial %s failed: %s", tag, err)
            result.failures[tag] = f"{type(err).__name__}: {err}"
        else:
            result.trials[tag] = m
    if grid.out_dir:
        write_results(result, Path(grid.out_dir))
    return result


def write_results(result: GridResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    trials = out / "trials"
    trials.mkdir(exist_ok=True)
    for tag in sorted(result.trials):
        (trials / f"{tag}.csv").write_text(result.trials[tag].to_csv())
    (out / "summary.json").write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
