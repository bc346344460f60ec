"""Monte Carlo driver: channel generation, frame loop, averaging and output."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from . import channel as ch
from .power import aggregate_gains, iterate_power
from .scenario import ScenarioConfig, config_hash, place_ues
from .scheduler import POLICIES, ScheduleState, schedule_frame_rates
from .utility import UtilityBank

log = logging.getLogger(__name__)

CSV_HEADER = ("frame", "ue", "policy", "throughput", "utility")
BATCH_SIZE = 25


@dataclass
class RunResult:
    """Replica-averaged outcome of one policy.

    ``throughput[f, i]`` is UE ``i``'s rate after frame ``f + 1`` averaged
    over Monte Carlo replicas, and ``utility`` its utility.
    """

    policy: str
    throughput: np.ndarray
    utility: np.ndarray
    phi: np.ndarray
    power: np.ndarray
    final_rates: np.ndarray
    scheduled: np.ndarray
    objective: Optional[np.ndarray] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def frames(self) -> int:
        return self.throughput.shape[0]

    @property
    def num_ues(self) -> int:
        return self.throughput.shape[1]

    @property
    def final_throughput(self) -> np.ndarray:
        return self.throughput[-1]

    @property
    def final_utility(self) -> np.ndarray:
        return self.utility[-1]


def replica_seeds(cfg: ScenarioConfig):
    """Shared topology stream plus one independent stream per replica."""
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(cfg.monte_carlo_iters + 1)
    return children[0], children[1:]


def _replica_setup(cfg: ScenarioConfig, ss: np.random.SeedSequence, fixed_positions):
    topo_ss, shadow_ss, fading_ss = ss.spawn(3)
    U, B, F = cfg.num_ues, cfg.num_enbs, cfg.grid.num_freq
    if fixed_positions is None:
        positions = place_ues(np.random.default_rng(topo_ss), cfg.area_m, U)
    else:
        positions = fixed_positions
    if cfg.unity_gain:
        return positions, np.ones((U, B, F)), None
    d = ch.distances_km(positions, cfg.enb_positions, cfg.min_distance_m)
    shadow = ch.sample_shadowing(np.random.default_rng(shadow_ss), F, cfg.shadowing_std_db, size=(U, B))
    static = ch.large_scale_gain(d, shadow)
    fading = ch.FadingProcess(np.random.default_rng(fading_ss), (U, B, F), cfg.doppler_hz, cfg.num_sinusoids)
    return positions, static, fading


def _noise(cfg: ScenarioConfig, shape):
    if cfg.unity_gain:
        # SNR on every RB equals unity_snr when the budget is split evenly
        return np.full(shape, cfg.rb_power_w / cfg.unity_snr)
    return np.full(shape, cfg.noise_w)


def simulate(cfg: ScenarioConfig, policies: Sequence[str] = None) -> Dict[str, RunResult]:
    """Run every policy in ``policies`` on identical channel realizations."""
    policies = tuple(policies or (cfg.policy,))
    for p in policies:
        if p not in POLICIES:
            raise ValueError(f"unknown policy {p!r}")
    bank = UtilityBank(cfg.ue_utilities)
    grid = cfg.grid
    U, B, Z, R = cfg.num_ues, cfg.num_enbs, grid.size, cfg.monte_carlo_iters
    topo_ss, seeds = replica_seeds(cfg)
    fixed_positions = place_ues(np.random.default_rng(topo_ss), cfg.area_m, U) if cfg.fixed_topology else None
    powers = np.full((B, Z), cfg.rb_power_w)

    traj = {p: np.zeros((cfg.frames, U)) for p in policies}
    phi_sum = {p: np.zeros((U, Z)) for p in policies}
    power_sum = {p: np.zeros((B, Z)) for p in policies}
    objective = {p: [] for p in policies}
    final_rates = {p: [] for p in policies}
    scheduled = {p: [] for p in policies}

    # With unity gains every replica sees the same H and the scheduler is
    # deterministic, so one replica stands for all of them.
    distinct = 1 if cfg.unity_gain else R
    for start in range(0, distinct, BATCH_SIZE):
        batch_seeds = seeds[start:start + BATCH_SIZE]
        n = min(len(batch_seeds), distinct - start)
        batch_seeds = batch_seeds[:n]
        setups = [_replica_setup(cfg, ss, fixed_positions) for ss in batch_seeds]
        static = np.stack([s[1] for s in setups])  # (n, U, B, F)
        serving = ch.serving_cells(static)  # (n, U)
        noise = _noise(cfg, (n, U, Z))
        fading = None if cfg.unity_gain else ch.FadingProcess.stack([s[2] for s in setups])
        states = {
            p: ScheduleState.empty(U, Z, (n,), policy=p, weights=cfg.weights, r_floor=cfg.r_floor,
                                   rate_update=cfg.rate_update)
            for p in policies
        }
        H = None
        for f in range(cfg.frames):
            if fading is not None or H is None:
                gain = static if fading is None else static * fading.step(cfg.frame_duration_s)
                real = ch.ChannelRealization(ch.expand_chunks(gain, grid), noise)
                H = real.throughput(powers, serving, cfg.rb_bandwidth)
            for p, state in states.items():
                schedule_frame_rates(state, H, bank, serving, B)
                traj[p][f] += state.r.sum(axis=0)
        for p, state in states.items():
            phi_sum[p] += state.phi.sum(axis=0)
            final_rates[p].append(state.r.copy())
            scheduled[p].append(state.scheduled.copy())
            if cfg.power_control:
                large_scale = ch.expand_chunks(static, grid)
                for j in range(n):
                    gains = aggregate_gains(large_scale[j], noise[j], serving[j], B, cfg.gain_aggregation)
                    res = iterate_power(powers, state.phi[j], gains, cfg.ue_utilities, serving[j], grid,
                                        cfg.rb_bandwidth, cfg.power_budget_w, cfg.alpha, cfg.max_iters, cfg.tol)
                    power_sum[p] += res.p
                    objective[p].append((res.trace[0], res.trace[-1], len(res.trace) - 1))
            else:
                power_sum[p] += powers * n
        log.info("replicas %d-%d of %d done", start + 1, start + n, distinct)

    results = {}
    copies = R // distinct
    for p in policies:
        mean = traj[p] / distinct
        objective_rows = objective[p] * copies
        results[p] = RunResult(
            policy=p,
            throughput=mean,
            utility=bank.value(mean),
            phi=phi_sum[p] / distinct,
            power=power_sum[p] / distinct,
            final_rates=np.tile(np.concatenate(final_rates[p]), (copies, 1)),
            scheduled=np.tile(np.concatenate(scheduled[p]), (copies, 1)),
            objective=np.array(objective_rows) if objective_rows else None,
            metadata={
                "config_hash": config_hash(cfg),
                "seed": cfg.seed,
                "policy": p,
                "frames": cfg.frames,
                "monte_carlo_iters": R,
                "unity_gain": cfg.unity_gain,
                "power_control": cfg.power_control,
            },
        )
    return results


def run(cfg: ScenarioConfig, policy: Optional[str] = None) -> RunResult:
    """Simulate one scheduling policy (default: ``cfg.policy``)."""
    policy = policy or cfg.policy
    return simulate(cfg, (policy,))[policy]


def compare(cfg: ScenarioConfig) -> Dict[str, RunResult]:
    """Both policies on identical channel realizations."""
    return simulate(cfg, POLICIES)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def csv_rows(results):
    if isinstance(results, RunResult):
        results = [results]
    for res in results:
        for f in range(res.frames):
            for i in range(res.num_ues):
                yield (str(f + 1), str(i + 1), res.policy, _fmt(res.throughput[f, i]), _fmt(res.utility[f, i]))


def write_csv(results, path) -> Path:
    """Write ``frame,ue,policy,throughput,utility`` rows (1-based frame and UE)."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            writer.writerows(csv_rows(results))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> Dict[str, np.ndarray]:
    """Inverse of ``write_csv``: ``{policy: array (frames, ues, 2)}``."""
    rows = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        for frame, ue, policy, thr, util in reader:
            rows.setdefault(policy, []).append((int(frame), int(ue), float(thr), float(util)))
    out = {}
    for policy, items in rows.items():
        frames = max(r[0] for r in items)
        ues = max(r[1] for r in items)
        arr = np.full((frames, ues, 2), np.nan)
        for frame, ue, thr, util in items:
            arr[frame - 1, ue - 1] = (thr, util)
        out[policy] = arr
    return out


def summary_rows(results: Dict[str, RunResult], cfg: ScenarioConfig):
    for p, res in results.items():
        for i, u in enumerate(cfg.ue_utilities):
            yield {
                "policy": p,
                "ue": i + 1,
                "kind": u.kind,
                "throughput": res.final_throughput[i],
                "utility": res.final_utility[i],
                "min_replica_rate": res.final_rates[:, i].min(),
                "min_rbs_scheduled": int(res.scheduled[:, i].min()),
            }


def write_summary(results: Dict[str, RunResult], cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    rows = list(summary_rows(results, cfg))
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def format_summary(results: Dict[str, RunResult], cfg: ScenarioConfig) -> str:
    lines = [f"{'policy':<12} {'ue':>3} {'kind':<12} {'throughput':>11} {'utility':>8}"]
    for row in summary_rows(results, cfg):
        lines.append(
            f"{row['policy']:<12} {row['ue']:>3} {row['kind']:<12} {row['throughput']:>11.4f} {row['utility']:>8.4f}"
        )
    for p, res in results.items():
        lines.append(f"{p}: sum of utilities {res.final_utility.sum():.4f}")
    return "\n".join(lines)
