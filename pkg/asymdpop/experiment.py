"""Parameter sweeps over random problems.

Every (agents, density, domain, tightness) point gets ``instances`` problems,
each solved by every (k_p, k_e) combination of the grid. Rows are produced in
canonical order so that a fixed seed yields byte-identical CSV files.
"""
from __future__ import annotations

import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from .engine import METRIC_UNITS, run
from .oracle import ORACLE_CAP, SearchSpaceTooLarge, brute_force
from .problem import DEFAULT_MAX_COST, Problem, random_adcop, random_maxdcsp
from .pseudotree import build_dfs
from .solver import INDUCED_WIDTH, WHOLE_GROUP, SolverConfig

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "family",
    "n",
    "density",
    "domain",
    "tightness",
    "kp",
    "ke",
    "instance",
    "seed",
    "cost",
    "oracle_cost",
    "nclo",
    "network_load",
    "message_count",
    "max_dims",
    "privacy_loss",
    "wall_ms",
]
POINT_COLUMNS = ["family", "n", "density", "domain", "tightness", "kp", "ke"]
MEDIAN_COLUMNS = ["cost", "nclo", "network_load", "message_count", "max_dims", "privacy_loss"]
NOT_AVAILABLE = "n/a"


class ExperimentSpec(BaseModel):
    family: Literal["adcop", "maxdcsp"] = "adcop"
    agents: List[int] = Field([8], min_length=1)
    density: List[float] = Field([0.25], min_length=1)
    domain: List[int] = Field([3], min_length=1)
    tightness: List[float] = Field([0.5], min_length=1)
    max_cost: int = Field(DEFAULT_MAX_COST, ge=0)
    kp: List[str] = Field([INDUCED_WIDTH], min_length=1)
    ke: List[str] = Field([WHOLE_GROUP], min_length=1)
    instances: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    oracle_cap: int = Field(ORACLE_CAP, ge=0)
    jobs: int = Field(1, ge=1)
    trace: bool = False
    wall_time: bool = False

    @field_validator("agents")
    @classmethod
    def check_agents(cls, values: List[int]) -> List[int]:
        if any(n < 2 for n in values):
            raise ValueError("agent numbers must be at least 2")
        return values

    @field_validator("kp", "ke", mode="before")
    @classmethod
    def normalise_knobs(cls, values):
        return [str(v) for v in values]

    @field_validator("kp")
    @classmethod
    def check_kp(cls, values: List[str]) -> List[str]:
        for value in values:
            SolverConfig.parse(k_p=value)
        return values

    @field_validator("ke")
    @classmethod
    def check_ke(cls, values: List[str]) -> List[str]:
        for value in values:
            SolverConfig.parse(k_e=value)
        return values

    def points(self) -> List[Tuple[int, float, int, Optional[float]]]:
        tightness = self.tightness if self.family == "maxdcsp" else [None]
        return list(itertools.product(self.agents, self.density, self.domain, tightness))

    def configs(self) -> List[SolverConfig]:
        return [SolverConfig.parse(k_p, k_e) for k_p, k_e in itertools.product(self.kp, self.ke)]


PRESETS: Dict[str, Dict[str, object]] = {
    "agents": {"agents": [8, 12, 16, 20, 24], "density": [0.25], "domain": [3], "kp": ["2", "3", "w*"], "instances": 50},
    "density": {"agents": [8], "density": [0.25, 0.4, 0.55, 0.7, 0.85, 1.0], "domain": [8], "kp": ["2", "3", "w*"], "instances": 50},
    "domain": {"agents": [8], "density": [0.4], "domain": [4, 6, 8, 10, 12, 14], "kp": ["2", "3", "w*"], "instances": 50},
    "tightness": {
        "family": "maxdcsp",
        "agents": [10],
        "density": [0.4],
        "domain": [10],
        "tightness": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        "kp": ["2", "3", "w*"],
        "instances": 50,
    },
    "batch": {"agents": [8], "density": [0.25], "domain": [3], "kp": ["2"], "ke": ["1", "2", "all"], "instances": 20},
}


def preset(name: str, **overrides) -> ExperimentSpec:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentSpec(**{**PRESETS[name], **overrides})


def instance_seed(base: int, n: int, density: float, domain: int, tightness: Optional[float], instance: int) -> int:
    """Seed of one generated problem, a pure function of its coordinates."""
    # SeedSequence takes non-negative entropy only; 0 marks "no tightness"
    level = 0 if tightness is None else round(tightness * 1000) + 1
    key = [base, n, round(density * 1000), domain, level, instance]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def generate(spec: ExperimentSpec, n: int, density: float, domain: int, tightness: Optional[float], seed: int) -> Problem:
    if spec.family == "maxdcsp":
        return random_maxdcsp(n, density, domain, tightness, seed=seed)
    return random_adcop(n, density, domain, max_cost=spec.max_cost, seed=seed)


def _number(value: float):
    return int(value) if float(value).is_integer() else round(float(value), 6)


def run_instance(spec: ExperimentSpec, point: Tuple[int, float, int, Optional[float]], instance: int) -> List[dict]:
    """Solve one generated problem with every configuration of the grid."""
    n, density, domain, tightness = point
    seed = instance_seed(spec.seed, n, density, domain, tightness, instance)
    problem = generate(spec, n, density, domain, tightness, seed)
    tree = build_dfs(problem)
    try:
        _, oracle_cost = brute_force(problem, cap=spec.oracle_cap)
        oracle_value = _number(oracle_cost)
    except SearchSpaceTooLarge:
        oracle_value = NOT_AVAILABLE

    rows = []
    for config in spec.configs():
        started = time.perf_counter()
        result = run(problem, tree, config, seed=seed, trace=spec.trace)
        elapsed = (time.perf_counter() - started) * 1000
        metrics = result.metrics
        rows.append(
            {
                "family": spec.family,
                "n": n,
                "density": density,
                "domain": domain,
                "tightness": "" if tightness is None else tightness,
                "kp": config.kp_label,
                "ke": config.ke_label,
                "instance": instance,
                "seed": seed,
                "cost": _number(result.cost),
                "oracle_cost": oracle_value,
                "nclo": metrics.nclo,
                "network_load": metrics.network_load,
                "message_count": metrics.message_count,
                "max_dims": metrics.max_dims,
                "privacy_loss": round(metrics.privacy_loss, 6),
                "wall_ms": round(elapsed, 3) if spec.wall_time else "",
                "trace": result.trace,
            }
        )
    return rows


def _run_task(args) -> List[dict]:
    return run_instance(*args)


def run_experiment(spec: ExperimentSpec) -> pd.DataFrame:
    """All rows of the sweep, one per (point, configuration, instance)."""
    tasks = [(spec, point, k) for point in spec.points() for k in range(spec.instances)]
    logger.info(f"Experiment: {len(tasks)} problems x {len(spec.configs())} configurations, jobs={spec.jobs}")
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            batches = list(pool.map(_run_task, tasks))
    else:
        batches = []
        for done, task in enumerate(tasks, start=1):
            batches.append(_run_task(task))
            logger.info(f"Solved problem {done}/{len(tasks)}")

    rows = [row for batch in batches for row in batch]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS + ["trace"])
    kp_rank = {v: k for k, v in enumerate(SolverConfig.parse(k_p=v).kp_label for v in spec.kp)}
    ke_rank = {v: k for k, v in enumerate(SolverConfig.parse(k_e=v).ke_label for v in spec.ke)}
    frame["_kp"] = frame["kp"].map(kp_rank)
    frame["_ke"] = frame["ke"].map(ke_rank)
    frame = frame.sort_values(["n", "density", "domain", "tightness", "_kp", "_ke", "instance"], kind="stable")
    return frame.drop(columns=["_kp", "_ke"]).reset_index(drop=True)


def summarize(rows: pd.DataFrame) -> pd.DataFrame:
    """Medians of the metric columns per parameter point and configuration."""
    numeric = rows[POINT_COLUMNS + MEDIAN_COLUMNS].copy()
    for column in MEDIAN_COLUMNS:
        numeric[column] = pd.to_numeric(numeric[column], errors="coerce")
    grouped = numeric.groupby(POINT_COLUMNS, sort=False, dropna=False)
    medians = grouped[MEDIAN_COLUMNS].median()
    medians.insert(0, "instances", grouped.size())
    return medians.reset_index()


def output_metadata(spec: Optional[ExperimentSpec] = None) -> Dict[str, object]:
    """How the columns of the rows file are counted, plus the sweep that produced them."""
    metadata: Dict[str, object] = {
        "columns": CSV_COLUMNS,
        "units": {
            **METRIC_UNITS,
            "oracle_cost": f"brute-force optimum, {NOT_AVAILABLE!r} above the oracle cap",
            "seed": "generator seed of the instance, derived from the base seed and the point",
            "wall_ms": "milliseconds per solve, empty unless wall time was requested",
        },
    }
    if spec is not None:
        metadata["spec"] = spec.model_dump(mode="json")
    return metadata


def write_outputs(rows: pd.DataFrame, out: Path, spec: Optional[ExperimentSpec] = None) -> Dict[str, Path]:
    """Write the rows CSV, the medians TSV and a ``.meta.json`` next to it and,
    when rows carry traces, a trace log."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows[CSV_COLUMNS].to_csv(out, index=False)
    medians_path = out.with_suffix(".medians.tsv")
    summarize(rows).to_csv(medians_path, sep="\t", index=False)
    meta_path = out.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(output_metadata(spec), indent=2) + "\n", encoding="utf-8")
    paths = {"rows": out, "medians": medians_path, "meta": meta_path}

    traced = rows[rows["trace"].notna()] if "trace" in rows else rows.iloc[0:0]
    if len(traced):
        trace_path = out.with_suffix(".trace")
        with open(trace_path, "w", encoding="utf-8") as handle:
            for _, row in traced.iterrows():
                handle.write(f"# n={row['n']} density={row['density']} domain={row['domain']} "
                             f"tightness={row['tightness']} kp={row['kp']} ke={row['ke']} instance={row['instance']}\n")
                handle.writelines(line + "\n" for line in row["trace"])
        paths["trace"] = trace_path
    return paths
