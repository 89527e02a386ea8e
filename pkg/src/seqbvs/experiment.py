"""End-to-end sequential study: generate, mask, impute, sweep, track sets.

One replication draws a dataset of size n_max, masks covariate cells once,
and then replays the stream: for every n from n_min to n_max it re-imputes
the first n rows from scratch (M completions), averages the per-imputation
Bayes factors, forms the mean pairwise log-Bayes-factor losses, advances
the E-processes, and records the four covariate inclusion vectors.  Time is
indexed t = n - n_min + 1.

Replications are deterministic given (base_seed, rep_index): every random
stream is derived from numpy's SeedSequence([base_seed, rep_index, tag]),
with tags 1 (covariates), 2 (noise), 3 (mask) and 1000 + n (imputation at
sample size n), so reps and time steps are reproducible individually and
independent of scheduling.

Crossing counts use the tie rule "prob == 0.5 counts as active"; NaN spans
(empty confidence sets, smcs method only) are dropped before counting.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bayes_lm import (
    POOLING_RULES,
    GramStats,
    model_sweep,
    pool_log_bf,
    posterior_from_imputations,
)
from .data_gen import DGPConfig, apply_missingness, gen_covariates, gen_responses
from .errors import ConfigError, DataError, InsufficientDataError
from .imputation import ImputationConfig, impute
from .inclusion import (
    METHODS,
    InclusionTrajectory,
    bvs_inclusion,
    mixed_inclusion,
    smcs_inclusion,
    zero_out,
)
from .model_space import enumerate_models
from .smcs import EProcessState, SmcsConfig, confidence_set, loss_from_log_marginals, step

_STREAM_COVARIATES = 1
_STREAM_NOISE = 2
_STREAM_MASK = 3
_STREAM_IMPUTE_BASE = 1000

LOSS_MODES = ("cumulative", "increment")
G_RULES = ("unit-info",)  # plus "fixed:<value>"

PROFILES = {"desk": {"reps": 20, "M": 10}, "full": {"reps": 100, "M": 50}}


@dataclass
class MissingnessConfig:
    rate: float = 0.4
    mechanism: str = "mcar"


@dataclass
class ExperimentConfig:
    reps: int = 20
    n_min: int = 19
    n_max: int = 100
    dgp: DGPConfig = field(default_factory=DGPConfig)
    imp: ImputationConfig = field(default_factory=lambda: ImputationConfig(M=10))
    smcs: SmcsConfig = field(default_factory=SmcsConfig)
    missing: MissingnessConfig = field(default_factory=MissingnessConfig)
    g_rule: str = "unit-info"
    model_prior: str = "uniform"
    base_seed: int = 0
    loss_mode: str = "cumulative"
    pooling: str = "geometric"

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if not self.n_min < self.n_max:
            raise ConfigError(f"need n_min < n_max, got {self.n_min} >= {self.n_max}")
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.pooling not in POOLING_RULES:
            raise ConfigError(f"pooling must be one of {POOLING_RULES}, got {self.pooling!r}")
        g_for_n(self.g_rule, self.n_min)  # validates the rule string

    @property
    def t_max(self) -> int:
        return self.n_max - self.n_min + 1


def default_config(profile: str = "desk", **overrides) -> ExperimentConfig:
    """The paper-style setup at the given profile (desk: 20 reps, M=10)."""
    if profile not in PROFILES:
        raise ConfigError(f"profile must be one of {tuple(PROFILES)}, got {profile!r}")
    sizes = PROFILES[profile]
    cfg = ExperimentConfig(
        reps=sizes["reps"],
        imp=ImputationConfig(M=sizes["M"]),
    )
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config field {key!r}")
        setattr(cfg, key, value)
    cfg.__post_init__()  # re-validate after overrides
    return cfg


def g_for_n(rule: str, n: int) -> float:
    """Prior scale for sample size n.

    'unit-info' is g = n; 'scaled:<c>' spreads one unit of prior information
    over c observations (g = n/c); 'fixed:<value>' holds g constant.
    """
    if rule == "unit-info":
        return float(n)
    if rule.startswith("fixed:") or rule.startswith("scaled:"):
        kind, _, raw = rule.partition(":")
        try:
            value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad g rule {rule!r}") from exc
        if value <= 0:
            raise ConfigError(f"g rule parameter must be positive, got {value}")
        return value if kind == "fixed" else float(n) / value
    raise ConfigError(
        f"unknown g rule {rule!r}; expected 'unit-info', 'scaled:<c>' or 'fixed:<value>'"
    )


def stream_rng(base_seed: int, rep_index: int, tag: int) -> np.random.Generator:
    """Named random stream under the documented splittable-seed rule."""
    return np.random.default_rng(np.random.SeedSequence([base_seed, rep_index, tag]))


@dataclass
class ReplicationResult:
    """Everything recorded for one replication."""

    rep: int
    n_min: int
    n_max: int
    trajectories: dict[str, InclusionTrajectory]
    set_sizes: np.ndarray  # (T,) size of the confidence set per time index
    crossings: dict[str, np.ndarray]  # per method, (p,) ints
    final_included: dict[str, np.ndarray]  # per method, (p,) bools at t_max
    had_nan: dict[str, bool]  # NaN spans dropped before counting crossings
    zero_out_fallbacks: int = 0


@dataclass
class CrossingStats:
    """Aggregates over replications in the shapes of the report tables."""

    reps: int
    p: int
    t_max: int
    mean_crossings: dict[str, np.ndarray]  # per method, (p,)
    final_freq: dict[str, np.ndarray]  # per method, (p,)
    total_mean: dict[str, float]  # mean over reps of summed crossings
    total_var: dict[str, float]  # sample variance of summed crossings
    cum_mean: dict[str, np.ndarray]  # (T,) mean cumulative total crossings
    cum_sd: dict[str, np.ndarray]  # (T,) sd of cumulative total crossings


def crossing_events(traj: np.ndarray) -> np.ndarray:
    """Per-time-index crossing indicators for one covariate's series.

    side(t) is active iff prob >= 0.5; entry t is 1 when the side changed
    relative to the previous non-NaN entry.  NaN entries never host an
    event and are bridged over.
    """
    traj = np.asarray(traj, dtype=float)
    if traj.size == 0:
        raise DataError("cannot count crossings of an empty series")
    events = np.zeros(traj.size, dtype=np.int64)
    prev_side = None
    for i, v in enumerate(traj):
        if np.isnan(v):
            continue
        side = v >= 0.5
        if prev_side is not None and side != prev_side:
            events[i] = 1
        prev_side = side
    return events


def count_crossings(traj: np.ndarray) -> int:
    """Number of 0.5-threshold side changes along one probability series."""
    return int(crossing_events(traj).sum())


def run_replication(config: ExperimentConfig, rep_index: int) -> ReplicationResult:
    """One full sequential pass; deterministic given (base_seed, rep_index)."""
    dgp = config.dgp
    space = enumerate_models(dgp.p)
    m = space.m
    t_count = config.t_max

    x_full = gen_covariates(config.n_max, dgp.cov, stream_rng(config.base_seed, rep_index, _STREAM_COVARIATES))
    y_full = gen_responses(x_full, dgp, stream_rng(config.base_seed, rep_index, _STREAM_NOISE))
    data = apply_missingness(
        x_full,
        config.missing.rate,
        config.missing.mechanism,
        stream_rng(config.base_seed, rep_index, _STREAM_MASK),
        y=y_full,
    )

    probs = {meth: np.full((t_count, dgp.p), np.nan) for meth in METHODS}
    set_sizes = np.zeros(t_count, dtype=np.int64)
    state = EProcessState.fresh(m)
    prev_avg: np.ndarray | None = None
    zero_out_fallbacks = 0

    for n in range(config.n_min, config.n_max + 1):
        t = n - config.n_min + 1
        sub = data.head(n)
        try:
            imputed = impute(sub, config.imp, stream_rng(config.base_seed, rep_index, _STREAM_IMPUTE_BASE + n))
        except InsufficientDataError as exc:
            if n == config.n_min:
                raise ConfigError(
                    f"imputation infeasible at n_min={config.n_min} ({exc}); increase n_min"
                ) from exc
            raise

        g = g_for_n(config.g_rule, n)
        per_imp = np.empty((config.imp.M, m))
        for j in range(config.imp.M):
            stats = GramStats.from_data(imputed.completions[j], sub.y)
            per_imp[j] = model_sweep(stats, space, g)
        avg = pool_log_bf(per_imp, config.pooling)

        post = posterior_from_imputations(per_imp, space, config.model_prior, config.pooling)
        if config.loss_mode == "increment" and prev_avg is not None:
            loss_vec = avg - prev_avg
        else:
            loss_vec = avg
        prev_avg = avg

        state = step(state, loss_from_log_marginals(loss_vec, t), config.smcs)
        members = confidence_set(state)
        set_sizes[t - 1] = members.size

        p_bvs = bvs_inclusion(post, space)
        p_smcs = smcs_inclusion(members, space)
        zo = zero_out(post, members, space)
        zero_out_fallbacks += int(zo.fallback)
        probs["bvs"][t - 1] = p_bvs
        probs["smcs"][t - 1] = p_smcs
        probs["zero_out"][t - 1] = zo.probs
        probs["mixed"][t - 1] = mixed_inclusion(p_bvs, p_smcs, members.size, m)

    trajectories = {meth: InclusionTrajectory(meth, probs[meth]) for meth in METHODS}
    crossings = {}
    final_included = {}
    had_nan = {}
    for meth in METHODS:
        mat = probs[meth]
        crossings[meth] = np.array([count_crossings(mat[:, k]) for k in range(dgp.p)])
        final_included[meth] = mat[-1] >= 0.5
        had_nan[meth] = bool(np.isnan(mat).any())

    return ReplicationResult(
        rep=rep_index,
        n_min=config.n_min,
        n_max=config.n_max,
        trajectories=trajectories,
        set_sizes=set_sizes,
        crossings=crossings,
        final_included=final_included,
        had_nan=had_nan,
        zero_out_fallbacks=zero_out_fallbacks,
    )


def aggregate(results: list[ReplicationResult]) -> CrossingStats:
    """Mean crossings, final inclusion frequencies, and crossing-total curves."""
    if not results:
        raise DataError("aggregate needs at least one replication")
    p = results[0].trajectories["bvs"].probs.shape[1]
    t_max = results[0].trajectories["bvs"].probs.shape[0]
    reps = len(results)

    mean_crossings = {}
    final_freq = {}
    total_mean = {}
    total_var = {}
    cum_mean = {}
    cum_sd = {}
    for meth in METHODS:
        counts = np.stack([r.crossings[meth] for r in results])  # (reps, p)
        finals = np.stack([r.final_included[meth] for r in results])
        mean_crossings[meth] = counts.mean(axis=0)
        final_freq[meth] = finals.mean(axis=0)
        totals = counts.sum(axis=1).astype(float)
        total_mean[meth] = float(totals.mean())
        total_var[meth] = float(totals.var(ddof=1)) if reps > 1 else 0.0
        cum = np.stack(
            [
                np.cumsum(
                    np.sum(
                        [crossing_events(r.trajectories[meth].probs[:, k]) for k in range(p)],
                        axis=0,
                    )
                )
                for r in results
            ]
        ).astype(float)  # (reps, T)
        cum_mean[meth] = cum.mean(axis=0)
        cum_sd[meth] = cum.std(axis=0, ddof=1) if reps > 1 else np.zeros(t_max)

    return CrossingStats(
        reps=reps,
        p=p,
        t_max=t_max,
        mean_crossings=mean_crossings,
        final_freq=final_freq,
        total_mean=total_mean,
        total_var=total_var,
        cum_mean=cum_mean,
        cum_sd=cum_sd,
    )


def _run_one(args: tuple[ExperimentConfig, int]) -> ReplicationResult:
    return run_replication(*args)


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    progress: bool = False,
) -> list[ReplicationResult]:
    """All replications, ordered by rep index regardless of scheduling."""
    reps = range(config.reps)
    if workers <= 1:
        results = []
        for r in reps:
            results.append(run_replication(config, r))
            if progress:
                print(f"replication {r + 1}/{config.reps} done", flush=True)
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_run_one, [(config, r) for r in reps]))
    if progress:
        print(f"{config.reps} replications done", flush=True)
    return results
