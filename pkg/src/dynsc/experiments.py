"""Monte Carlo sweep harness.

A sweep runs ``trials`` independent dynamic-SBM realizations and, for each
smoother grid point (forgetting factors and/or window sizes) and matrix kind
(adjacency / normalized Laplacian), records the spectral estimation error at
the final time step together with the clustering metrics of the spectral
algorithm run on the smoothed input.

Rows are reproducible in isolation: every record carries the sub-seed that
drove its clustering, and sequences are regenerable from ``(seed, trial)``.
Trials may run in a process pool; records are sorted before writing so the
output does not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .dynamics import (
    DeterministicDsbmConfig,
    MarkovDsbmConfig,
    MembershipSequence,
    SnapshotSequence,
    gen_deterministic_sequence,
    gen_markov_sequence,
    sample_snapshot_sequence,
)
from .errors import InvalidInputError
from .metrics import adjusted_rand_index, misclassification_error
from .sbm import ConnectivityModel, build_probability_matrix, normalized_laplacian
from .smoothing import Exponential, Uniform, weights_of, weighted_smooth
from .spectral import spectral_cluster, spectral_norm
from .util import subseed

CSV_SCHEMA_VERSION = "dynsc-sweep-csv v1"
CSV_COLUMNS = ("trial", "t", "grid_param_kind", "grid_param_value", "matrix_kind",
               "spec_err", "ari", "e_value", "kmeans_cost", "eigengap", "seed", "wall_ms")

_TAG_TRIAL_MEMBERSHIP = 11
_TAG_TRIAL_SNAPSHOTS = 12
_TAG_CLUSTER = 13

DEFAULT_LAMBDA_GRID = tuple(float(x) for x in np.geomspace(0.04, 1.0, 12))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameter space of a sweep; defaults follow the mid-scale preset.

    Exactly one of ``alpha`` (absolute), ``alpha_log_scale``
    (``alpha = c * log(n) / n``) or ``alpha_inv_scale`` (``alpha = c / n``)
    must be set.
    """

    mode: str = "deterministic"
    n: int = 500
    k: int = 3
    tau: float = 0.3
    alpha: float | None = None
    alpha_log_scale: float | None = 3.0
    alpha_inv_scale: float | None = None
    epsilon: float = 0.01
    t_len: int = 60
    n_min: int | None = None
    n_max: int | None = None
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    r_grid: tuple = ()
    matrix: str = "both"
    trials: int = 20
    seed: int = 0
    threads: int = 1
    restarts: int = 20

    def __post_init__(self):
        set_scales = [v is not None for v in (self.alpha, self.alpha_log_scale,
                                              self.alpha_inv_scale)]
        if sum(set_scales) != 1:
            raise InvalidInputError(
                "exactly one of alpha, alpha_log_scale, alpha_inv_scale must be set")
        if self.mode not in ("deterministic", "markov"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.matrix not in ("adjacency", "laplacian", "both"):
            raise InvalidInputError(f"unknown matrix kind {self.matrix!r}")
        if not self.lambda_grid and not self.r_grid:
            raise InvalidInputError("smoother grid must be non-empty")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if any(r > self.t_len + 1 for r in self.r_grid):
            raise InvalidInputError("window sizes must not exceed t_len + 1")
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "r_grid", tuple(int(v) for v in self.r_grid))

    @property
    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        if self.alpha_log_scale is not None:
            return float(self.alpha_log_scale) * math.log(self.n) / self.n
        return float(self.alpha_inv_scale) / self.n

    @property
    def resolved_n_min(self) -> int:
        return self.n_min if self.n_min is not None else int(math.floor(0.8 * self.n / self.k))

    @property
    def resolved_n_max(self) -> int:
        return self.n_max if self.n_max is not None else int(math.ceil(1.2 * self.n / self.k))

    def model(self) -> ConnectivityModel:
        return ConnectivityModel.planted_partition(self.k, self.resolved_alpha, self.tau)

    def matrix_kinds(self) -> tuple[str, ...]:
        return ("adjacency", "laplacian") if self.matrix == "both" else (self.matrix,)

    def grid(self) -> tuple[tuple[str, float], ...]:
        points = [("lambda", lam) for lam in self.lambda_grid]
        points += [("r", float(r)) for r in self.r_grid]
        return tuple(points)

    def to_kv(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(format(v, ".12g") for v in value)
            out[f.name] = value
        return out

    @classmethod
    def from_kv(cls, kv: dict) -> "ExperimentConfig":
        kwargs = {}
        casts = {
            "mode": str, "n": int, "k": int, "tau": float, "alpha": float,
            "alpha_log_scale": float, "alpha_inv_scale": float, "epsilon": float,
            "t_len": int, "n_min": int, "n_max": int, "matrix": str,
            "trials": int, "seed": int, "threads": int, "restarts": int,
        }
        for key, value in kv.items():
            if key in casts:
                kwargs[key] = casts[key](value)
            elif key == "lambda_grid":
                kwargs[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key == "r_grid":
                kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
            else:
                raise InvalidInputError(f"unknown config key {key!r}")
        if "alpha" in kwargs or "alpha_inv_scale" in kwargs:
            kwargs.setdefault("alpha_log_scale", None)
        if "alpha" in kwargs and "alpha_inv_scale" in kwargs:
            raise InvalidInputError("set only one alpha parameterization")
        return cls(**kwargs)


@dataclass(frozen=True)
class RunRecord:
    """One sweep measurement: a (trial, grid point, matrix kind) cell."""

    trial: int
    t: int
    grid_param_kind: str
    grid_param_value: float
    matrix_kind: str
    spec_err: float
    ari: float
    e_value: float
    kmeans_cost: float
    eigengap: float
    seed: int
    wall_ms: float


def generate_trial_sequence(cfg: ExperimentConfig, trial: int):
    """Membership + snapshots for one trial, seeded by ``(cfg.seed, trial)``."""
    model = cfg.model()
    mseed = subseed(cfg.seed, _TAG_TRIAL_MEMBERSHIP, trial)
    if cfg.mode == "deterministic":
        dcfg = DeterministicDsbmConfig.from_epsilon(
            n=cfg.n, model=model, t_len=cfg.t_len, epsilon=cfg.epsilon,
            n_min=cfg.resolved_n_min, n_max=cfg.resolved_n_max, seed=mseed)
        seq = gen_deterministic_sequence(dcfg)
    else:
        mcfg = MarkovDsbmConfig(n=cfg.n, model=model, t_len=cfg.t_len,
                                epsilon=cfg.epsilon, seed=mseed)
        seq = gen_markov_sequence(mcfg)
    snaps = sample_snapshot_sequence(seq, model,
                                     subseed(cfg.seed, _TAG_TRIAL_SNAPSHOTS, trial))
    return seq, snaps


def evaluate_smoothed(cfg: ExperimentConfig, trial: int, seq: MembershipSequence,
                      snaps: SnapshotSequence) -> list[RunRecord]:
    """Evaluate every grid point and matrix kind on one realized sequence."""
    model = cfg.model()
    truth = seq.thetas[-1]
    p_last = build_probability_matrix(truth, model)
    kinds = cfg.matrix_kinds()
    lap_p = normalized_laplacian(p_last) if "laplacian" in kinds else None
    records = []
    for gidx, (gkind, gvalue) in enumerate(cfg.grid()):
        smoother = Exponential(gvalue) if gkind == "lambda" else Uniform(int(gvalue))
        betas = weights_of(smoother, seq.t_len).betas
        smoothed = weighted_smooth(snaps.snapshots, betas)
        for kidx, kind in enumerate(kinds):
            start = time.perf_counter()
            if kind == "adjacency":
                target_err = spectral_norm(smoothed - p_last)
                cluster_input = smoothed
            else:
                lap_a = normalized_laplacian(smoothed, zero_degree="zero-row")
                target_err = spectral_norm(lap_a - lap_p)
                cluster_input = lap_a
            cseed = subseed(cfg.seed, _TAG_CLUSTER, trial, gidx, kidx)
            result = spectral_cluster(cluster_input, cfg.k, restarts=cfg.restarts,
                                      seed=cseed)
            wall_ms = (time.perf_counter() - start) * 1e3
            records.append(RunRecord(
                trial=trial,
                t=seq.t_len,
                grid_param_kind=gkind,
                grid_param_value=gvalue,
                matrix_kind=kind,
                spec_err=target_err,
                ari=adjusted_rand_index(result.labels, truth),
                e_value=misclassification_error(result.labels, truth).e_value,
                kmeans_cost=result.cost,
                eigengap=result.eigengap,
                seed=cseed,
                wall_ms=wall_ms,
            ))
    return records


def _run_trial(cfg: ExperimentConfig, trial: int) -> list[RunRecord]:
    seq, snaps = generate_trial_sequence(cfg, trial)
    return evaluate_smoothed(cfg, trial, seq, snaps)


def run_sweep(cfg: ExperimentConfig) -> list[RunRecord]:
    """All records of a sweep, canonically ordered.

    With ``cfg.threads > 1`` trials run in a process pool; per-trial seeding
    makes the result identical to the serial run.
    """
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            chunks = list(pool.map(_run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        chunks = [_run_trial(cfg, trial) for trial in range(cfg.trials)]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.trial, r.grid_param_kind, r.grid_param_value,
                                r.matrix_kind))
    return records


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def median_by_grid(records: list[RunRecord], matrix_kind: str, grid_kind: str,
                   value_field: str) -> dict[float, float]:
    """Median of ``value_field`` across trials, per grid value."""
    groups: dict[float, list[float]] = {}
    for rec in records:
        if rec.matrix_kind == matrix_kind and rec.grid_param_kind == grid_kind:
            groups.setdefault(rec.grid_param_value, []).append(getattr(rec, value_field))
    return {v: float(np.median(vals)) for v, vals in sorted(groups.items())}


def _fit_rate_constant(med_err: dict[float, float], cfg: ExperimentConfig,
                       matrix_kind: str) -> float:
    """Least-squares constant c in ``median_err ~ c * shape(beta_max)``.

    The shape is the two-term bound with unit constants:
    ``sqrt(n a b) + a sqrt(n nbar eps / b)`` for the adjacency, scaled by
    ``mu_B / (nbar_min a)`` for the Laplacian.
    """
    from .sbm import effective_sizes  # local import to keep module load light

    alpha = cfg.resolved_alpha
    prof = effective_sizes(cfg.model(), cfg.n, cfg.resolved_n_min, cfg.resolved_n_max)
    nbar_max = prof.nbar_max if cfg.mode == "deterministic" else float(cfg.n)
    xs, ys = [], []
    for beta_max, err in med_err.items():
        shape = math.sqrt(cfg.n * alpha * beta_max)
        if cfg.epsilon > 0:
            shape += alpha * math.sqrt(cfg.n * nbar_max * cfg.epsilon / beta_max)
        if matrix_kind == "laplacian":
            shape *= prof.mu_b / (prof.nbar_min * alpha)
        xs.append(shape)
        ys.append(err)
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    denom = float((xs * xs).sum())
    return float((xs * ys).sum() / denom) if denom > 0 else float("nan")


def summarize(records: list[RunRecord], cfg: ExperimentConfig) -> dict:
    """Grid argmins/argmaxes per matrix kind and smoother family.

    The grid value minimizing the median spectral error and the one
    maximizing the median ARI are reported separately: they are observed to
    disagree slightly, so conflating them would hide that effect.
    """
    out: dict[str, object] = {"schema": CSV_SCHEMA_VERSION}
    norm = math.sqrt(cfg.resolved_alpha * cfg.n * cfg.epsilon) if cfg.epsilon > 0 else None
    for kind in cfg.matrix_kinds():
        for gkind in ("lambda", "r"):
            med_err = median_by_grid(records, kind, gkind, "spec_err")
            if not med_err:
                continue
            med_ari = median_by_grid(records, kind, gkind, "ari")
            star_err = min(med_err, key=med_err.get)
            star_ari = max(med_ari, key=med_ari.get)
            prefix = f"{kind}.{gkind}"
            out[f"{prefix}.star_err"] = star_err
            out[f"{prefix}.min_median_err"] = med_err[star_err]
            out[f"{prefix}.star_ari"] = star_ari
            out[f"{prefix}.best_median_ari"] = med_ari[star_ari]
            if gkind == "lambda":
                if norm:
                    out[f"{prefix}.star_err_normalized"] = star_err / norm
                    out[f"{prefix}.star_ari_normalized"] = star_ari / norm
                out[f"{prefix}.fitted_rate_constant"] = _fit_rate_constant(
                    med_err, cfg, kind)
            else:
                inv = {1.0 / r: e for r, e in med_err.items()}
                out[f"{prefix}.fitted_rate_constant"] = _fit_rate_constant(inv, cfg, kind)
    return out


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def _format_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def records_to_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_format_cell(getattr(rec, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def write_records_csv(records: list[RunRecord], path) -> None:
    Path(path).write_text(records_to_csv(records))


def read_records_csv(path) -> list[RunRecord]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    records = []
    for row in reader:
        records.append(RunRecord(
            trial=int(row["trial"]), t=int(row["t"]),
            grid_param_kind=row["grid_param_kind"],
            grid_param_value=float(row["grid_param_value"]),
            matrix_kind=row["matrix_kind"], spec_err=float(row["spec_err"]),
            ari=float(row["ari"]), e_value=float(row["e_value"]),
            kmeans_cost=float(row["kmeans_cost"]), eigengap=float(row["eigengap"]),
            seed=int(row["seed"]), wall_ms=float(row["wall_ms"]),
        ))
    return records


def plot_data_by_grid(records: list[RunRecord], cfg: ExperimentConfig) -> str:
    """Figure-style CSV: per grid point and matrix kind, the median error and ARI.

    ``normalized_value`` rescales the smoothing intensity (``lambda``, or
    ``1/r`` for windows) by ``sqrt(alpha n epsilon)``, the scale on which the
    optimum is predicted to sit; empty when ``epsilon = 0``.
    """
    norm = math.sqrt(cfg.resolved_alpha * cfg.n * cfg.epsilon) if cfg.epsilon > 0 else None
    buf = io.StringIO()
    buf.write(f"# {CSV_SCHEMA_VERSION} plot-data\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grid_param_kind", "grid_param_value", "normalized_value",
                     "matrix_kind", "median_spec_err", "median_ari"])
    for kind in cfg.matrix_kinds():
        for gkind in ("lambda", "r"):
            med_err = median_by_grid(records, kind, gkind, "spec_err")
            med_ari = median_by_grid(records, kind, gkind, "ari")
            for gvalue in med_err:
                intensity = gvalue if gkind == "lambda" else 1.0 / gvalue
                writer.writerow([gkind, _format_cell(gvalue),
                                 _format_cell(intensity / norm) if norm else "",
                                 kind, _format_cell(med_err[gvalue]),
                                 _format_cell(med_ari[gvalue])])
    return buf.getvalue()
