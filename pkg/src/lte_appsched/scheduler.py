"""Per-frame resource-block assignment.

Two policies share one state machine:

* ``app-aware``: RB ``z`` goes to the UE maximizing ``U_i'(r_i) / U_i(r_i) * H_iz``
  (utility proportional fairness).
* ``weighted-pf``: RB ``z`` goes to the UE maximizing ``w_i * H_iz / r_i``.

``phi[i, z]`` is the running fraction of frames in which RB ``z`` was given
to UE ``i``; after frame ``k`` it is updated as
``phi <- (k-1)/k * phi + 1/k * [i scheduled]``, and ``r_i = sum_z phi[i, z] H[i, z]``.

RBs are visited in ascending order. With ``rate_update="frame"`` every
ratio in frame ``k`` uses the rates implied by ``phi[k]``, the shares at the
start of the frame; with ``"running"`` ``r`` is refreshed after every single
assignment. History starts empty (``phi = 0``, ``r = 0``), so the first
ratios are evaluated at the rate floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .utility import R_FLOOR, UtilityBank

APP_AWARE = "app-aware"
WEIGHTED_PF = "weighted-pf"
POLICIES = (APP_AWARE, WEIGHTED_PF)

FRAME = "frame"
RUNNING = "running"
RATE_UPDATES = (FRAME, RUNNING)

_KIND_CODE = {"sigmoidal": 0, "logarithmic": 1}


def _as_bank(utilities) -> UtilityBank:
    return utilities if isinstance(utilities, UtilityBank) else UtilityBank(utilities)


@dataclass
class ScheduleState:
    """Scheduling history for one cell layout, optionally batched.

    Attributes
    ----------
    phi : ndarray, shape (..., n_ues, n_rbs)
        Fraction of past frames each RB was assigned to each UE.
    r : ndarray, shape (..., n_ues)
        Current per-UE throughput ``sum_z phi * H``.
    k : int
        Index of the next frame to schedule (starts at 1).
    policy : str
        ``"app-aware"`` or ``"weighted-pf"``.
    weights : ndarray, shape (n_ues,)
        Priority weights for ``weighted-pf``; ignored otherwise.
    r_floor : float
        Rates below this are treated as ``r_floor`` when scoring.
    """

    phi: np.ndarray
    r: np.ndarray
    k: int = 1
    policy: str = APP_AWARE
    weights: Optional[np.ndarray] = None
    r_floor: float = R_FLOOR
    rate_update: str = FRAME
    scheduled: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        n_ues = self.phi.shape[-2]
        if self.weights is None:
            self.weights = np.ones(n_ues)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (n_ues,) or np.any(self.weights <= 0):
            raise ValueError("weights must be positive, one per UE")
        if self.rate_update not in RATE_UPDATES:
            raise ValueError(f"unknown rate_update {self.rate_update!r}; expected one of {RATE_UPDATES}")
        if not self.r_floor > 0:
            raise ValueError(f"r_floor must be positive, got {self.r_floor}")
        if self.scheduled is None:
            self.scheduled = np.zeros(self.r.shape, dtype=np.int64)

    @classmethod
    def empty(cls, n_ues: int, n_rbs: int, batch: tuple = (), **kwargs) -> "ScheduleState":
        batch = tuple(batch)
        return cls(phi=np.zeros(batch + (n_ues, n_rbs)), r=np.zeros(batch + (n_ues,)), **kwargs)

    @property
    def n_ues(self) -> int:
        return self.phi.shape[-2]

    @property
    def n_rbs(self) -> int:
        return self.phi.shape[-1]

    def copy(self) -> "ScheduleState":
        return ScheduleState(
            phi=self.phi.copy(),
            r=self.r.copy(),
            k=self.k,
            policy=self.policy,
            weights=self.weights.copy(),
            r_floor=self.r_floor,
            rate_update=self.rate_update,
            scheduled=self.scheduled.copy(),
        )


def total_throughput(phi_row, H_row):
    """``sum_z phi[z] * H[z]`` for one UE."""
    phi_row = np.asarray(phi_row, dtype=float)
    H_row = np.asarray(H_row, dtype=float)
    if phi_row.shape[-1] != H_row.shape[-1]:
        raise ValueError(f"phi has {phi_row.shape[-1]} RBs but H has {H_row.shape[-1]}")
    out = np.sum(phi_row * H_row, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _masked_argmax(score, members):
    if members is not None:
        score = np.where(members, score, -np.inf)
    out = np.argmax(score, axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def select_ue_app_aware(rates, H_col, utilities, r_floor: float = R_FLOOR, members=None):
    """UE index maximizing ``U'(r)/U(r) * H``; ties go to the lowest index.

    ``rates`` and ``H_col`` have the UE axis last. ``members`` optionally
    restricts the choice to UEs of one cell.
    """
    bank = _as_bank(utilities)
    score = bank.ratio(rates, r_floor) * np.asarray(H_col, dtype=float)
    return _masked_argmax(score, members)


def select_ue_weighted_pf(weights, H_col, rates, r_floor: float = R_FLOOR, members=None):
    """UE index maximizing ``w * H / max(r, r_floor)``; ties go to the lowest index."""
    score = np.asarray(weights, dtype=float) * np.asarray(H_col, dtype=float) / np.maximum(rates, r_floor)
    return _masked_argmax(score, members)


def update_phi(state: ScheduleState, rb: int, scheduled_ue, members=None) -> ScheduleState:
    """Apply the online update for one RB in place and return ``state``.

    Every UE in ``members`` (default: all) has its share of ``rb`` scaled
    by ``(k-1)/k``; ``scheduled_ue`` then gains ``1/k``.
    """
    k = state.k
    if k < 1:
        raise ValueError(f"frame counter must be >= 1, got {k}")
    scale = (k - 1) / k
    col = state.phi[..., :, rb]
    if members is None:
        col *= scale
    else:
        col[...] = np.where(members, col * scale, col)
    ue = np.asarray(scheduled_ue)
    if ue.ndim == 0:
        state.phi[..., int(ue), rb] += 1.0 / k
        state.scheduled[..., int(ue)] += 1
    else:
        flat_phi = state.phi.reshape(-1, state.n_ues, state.n_rbs)
        idx = np.arange(flat_phi.shape[0])
        flat_phi[idx, ue.ravel(), rb] += 1.0 / k
        flat_sched = state.scheduled.reshape(-1, state.n_ues)
        flat_sched[idx, ue.ravel()] += 1
    return state


# Scalar kernels for the compiled frame loop; they mirror utility.py.

@njit(cache=True)
def _log_expit(x):
    if x >= 0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


@njit(cache=True)
def _ratio(kind, p1, p2, r):
    if kind == 0:
        a = p1
        b = p2
        x = a * (r - b)
        log_value = -a * b + a * r + np.log(-np.expm1(-a * r)) + _log_expit(-x)
        log_deriv = np.log1p(np.exp(-a * b)) + np.log(a) + _log_expit(x) + _log_expit(-x)
        return np.exp(log_deriv - log_value)
    return p1 / ((1.0 + p1 * r) * np.log1p(p1 * r))


@njit(cache=True)
def _frame_kernel(phi, r, H, serving, n_cells, k, running, pf, kinds, p1, p2, weights, r_floor, assign, scheduled):
    n_rep, n_ues, n_rbs = phi.shape
    r_start = r.copy()
    scale = (k - 1) / k
    inc = 1.0 / k
    for rep in range(n_rep):
        for z in range(n_rbs):
            for b in range(n_cells):
                best = -1
                best_score = -np.inf
                for i in range(n_ues):
                    if serving[rep, i] != b:
                        continue
                    if running:
                        ri = r[rep, i]
                    else:
                        ri = r_start[rep, i]
                    if ri < r_floor:
                        ri = r_floor
                    if pf:
                        score = weights[i] * H[rep, i, z] / ri
                    else:
                        score = _ratio(kinds[i], p1[i], p2[i], ri) * H[rep, i, z]
                    if best < 0 or score > best_score:
                        best = i
                        best_score = score
                assign[rep, b, z] = best
                if best < 0:
                    continue
                for i in range(n_ues):
                    if serving[rep, i] == b:
                        old = phi[rep, i, z]
                        new = old * scale
                        phi[rep, i, z] = new
                        r[rep, i] += (new - old) * H[rep, i, z]
                phi[rep, best, z] += inc
                r[rep, best] += inc * H[rep, best, z]
                scheduled[rep, best] += 1


def _kernel_params(bank: UtilityBank):
    kinds = np.array([_KIND_CODE[u.kind] for u in bank.utilities], dtype=np.int64)
    p1 = np.array([u.a if u.kind == "sigmoidal" else u.k for u in bank.utilities], dtype=float)
    p2 = np.array([u.b if u.kind == "sigmoidal" else u.r_max for u in bank.utilities], dtype=float)
    return kinds, p1, p2


def schedule_frame_rates(state: ScheduleState, H, utilities, serving=None, n_cells: Optional[int] = None):
    """Schedule one frame given per-RB rates ``H`` of shape ``(..., n_ues, n_rbs)``.

    ``serving`` maps each UE to its cell (default: a single cell). Returns
    the assignment array ``(..., n_cells, n_rbs)`` holding the scheduled UE
    per cell and RB (``-1`` for cells without UEs). ``state`` is updated in
    place and its frame counter advanced.
    """
    bank = _as_bank(utilities)
    H = np.asarray(H, dtype=float)
    batch = state.phi.shape[:-2]
    n_ues, n_rbs = state.n_ues, state.n_rbs
    if H.shape[-2:] != (n_ues, n_rbs):
        raise ValueError(f"H has shape {H.shape}, expected (..., {n_ues}, {n_rbs})")
    if len(bank) != n_ues:
        raise ValueError(f"{len(bank)} utilities for {n_ues} UEs")
    H = np.broadcast_to(H, batch + (n_ues, n_rbs))
    if serving is None:
        serving = np.zeros(batch + (n_ues,), dtype=np.int64)
    serving = np.broadcast_to(np.asarray(serving, dtype=np.int64), batch + (n_ues,))
    if n_cells is None:
        n_cells = int(serving.max()) + 1 if serving.size else 1

    n_rep = int(np.prod(batch, dtype=int))
    phi = np.ascontiguousarray(state.phi.reshape(n_rep, n_ues, n_rbs))
    H2 = np.ascontiguousarray(H.reshape(n_rep, n_ues, n_rbs))
    serv = np.ascontiguousarray(serving.reshape(n_rep, n_ues))
    scheduled = np.ascontiguousarray(state.scheduled.reshape(n_rep, n_ues))
    r = np.sum(phi * H2, axis=-1)
    assign = np.empty((n_rep, n_cells, n_rbs), dtype=np.int64)
    kinds, p1, p2 = _kernel_params(bank)
    _frame_kernel(
        phi, r, H2, serv, n_cells, state.k, state.rate_update == RUNNING,
        state.policy == WEIGHTED_PF,
        kinds, p1, p2, state.weights, state.r_floor, assign, scheduled,
    )
    state.phi = phi.reshape(batch + (n_ues, n_rbs))
    state.scheduled = scheduled.reshape(batch + (n_ues,))
    state.r = np.sum(state.phi * H, axis=-1)
    state.k += 1
    return assign.reshape(batch + (n_cells, n_rbs))


def schedule_frame(state: ScheduleState, channel, powers, utilities, serving=None, rb_bandwidth: float = 1.0,
                   n_cells: Optional[int] = None):
    """Compute per-RB rates from ``channel`` and ``powers`` and schedule one frame."""
    if serving is None:
        serving = np.zeros(state.r.shape, dtype=np.int64)
    H = channel.throughput(powers, serving, rb_bandwidth)
    if n_cells is None:
        n_cells = np.shape(powers)[-2]
    return schedule_frame_rates(state, H, utilities, serving, n_cells)
