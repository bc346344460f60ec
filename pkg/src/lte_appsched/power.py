"""Projected-gradient transmit power control over a fixed schedule.

Given the converged schedule ``phi*`` each eNodeB ``b`` picks per-RB powers
``P[b, z]`` to increase

    Y(P) = sum_i log U_i( sum_z phi*[i, z] * W * log2(1 + SINR[b(i), z](P)) )

where every client of cell ``b`` is represented by the cell-level gains
``g[b, l, z]`` and noise ``n[b, z]``. Each sweep takes a gradient step for all
eNodeBs at once and projects each (eNodeB, slot) block back onto
``{p >= 0, sum_f p[f] <= budget}`` by clipping and, if needed, rescaling.
The problem is non-convex; iterates only climb to a local optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import RbGrid
from .utility import UtilityBank

LN2 = np.log(2.0)
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class AggregatedGains:
    """Cell-level channel description.

    ``g[b, l, z]`` is the gain from eNodeB ``l`` to the clients of cell ``b``
    on RB ``z``; ``n[b, z]`` their noise power.
    """

    g: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        if np.any(~(self.g > 0)) or np.any(~(self.n > 0)):
            raise ValueError("aggregated gains and noise must be positive")

    @property
    def num_enbs(self) -> int:
        return self.g.shape[0]


@dataclass
class PowerAllocation:
    """Per-(eNodeB, RB) powers with a per-slot budget."""

    p: np.ndarray
    budget: float
    grid: RbGrid
    alpha: float = 0.0

    def slot_sums(self) -> np.ndarray:
        return slot_view(self.p, self.grid).sum(axis=-1)

    def is_feasible(self, atol: float = 1e-12) -> bool:
        return bool(np.all(self.p >= 0) and np.all(self.slot_sums() <= self.budget + atol))


@dataclass
class PowerResult:
    p: np.ndarray
    trace: list
    alpha: float
    converged: bool


def slot_view(p, grid: RbGrid) -> np.ndarray:
    """``(..., Z)`` powers viewed as ``(..., num_slots, num_freq)``."""
    p = np.asarray(p)
    return p.reshape(p.shape[:-1] + (grid.num_slots, grid.num_freq))


def aggregate_gains(gain, noise, serving, n_enbs: int, how: str = "mean") -> AggregatedGains:
    """Reduce per-UE gains ``(U, B, Z)`` and noise ``(U, Z)`` to cell level.

    Cells without clients fall back to the reduction over all UEs; their own
    terms never enter the objective.
    """
    reduce = {"mean": np.mean, "median": np.median}[how]
    gain = np.asarray(gain, dtype=float)
    noise = np.asarray(noise, dtype=float)
    serving = np.asarray(serving)
    g = np.empty((n_enbs,) + gain.shape[1:])
    n = np.empty((n_enbs,) + noise.shape[1:])
    for b in range(n_enbs):
        members = serving == b
        if not members.any():
            members = np.ones_like(members)
        g[b] = reduce(gain[members], axis=0)
        n[b] = reduce(noise[members], axis=0)
    return AggregatedGains(g, n)


def _interference_terms(P, gains: AggregatedGains):
    P = np.asarray(P, dtype=float)
    rx = gains.g * P[None, :, :]  # (B, B, Z): rx[b, l] received by cell b from l
    own = np.einsum("bbz->bz", rx)
    total = gains.n + rx.sum(axis=1)
    return own, total, total - own


def all_cell_sinr(P, gains: AggregatedGains) -> np.ndarray:
    """SINR of every cell on every RB, shape ``(B, Z)``."""
    own, _, excl = _interference_terms(P, gains)
    return own / excl


def cell_sinr(P, gains: AggregatedGains, b: int, rb: int) -> float:
    """``g[b,b] P[b] / (n[b] + sum_{l != b} g[b,l] P[l])`` on one RB."""
    P = np.asarray(P, dtype=float)
    interference = sum(gains.g[b, l, rb] * P[l, rb] for l in range(P.shape[0]) if l != b)
    return float(gains.g[b, b, rb] * P[b, rb] / (gains.n[b, rb] + interference))


def ue_rates(P, phi_star, gains: AggregatedGains, serving, rb_bandwidth: float) -> np.ndarray:
    """Per-UE throughput implied by powers ``P`` and the fixed schedule."""
    sinr = all_cell_sinr(P, gains)
    per_rb = rb_bandwidth * np.log2(1.0 + sinr)  # (B, Z)
    return np.sum(np.asarray(phi_star) * per_rb[np.asarray(serving)], axis=-1)


def objective_Y(P, phi_star, gains, utilities, serving, rb_bandwidth: float = 1.0) -> float:
    """Sum of log-utilities; ``-inf`` when any UE's rate is zero."""
    bank = utilities if isinstance(utilities, UtilityBank) else UtilityBank(utilities)
    rates = ue_rates(P, phi_star, gains, serving, rb_bandwidth)
    if np.any(rates <= 0):
        return -np.inf
    return float(np.sum(bank.log_value(rates)))


def gradient_Y(P, phi_star, gains, utilities, serving, rb_bandwidth: float = 1.0, b=None, rb=None):
    """Analytic ``dY/dP``; full ``(B, Z)`` array, or one entry if ``b`` and ``rb`` are given.

    The own-cell term is ``A[b,z] g[b,b,z] / (n + sum_l g[b,l] P[l])`` and
    the cross-cell term ``-sum_{o != b} A[o,z] g[o,o] P[o] g[o,b] /
    ((n + sum_{l != o} g[o,l] P[l]) (n + sum_l g[o,l] P[l]))`` with
    ``A[b,z] = sum_{i in b} U_i'/U_i * phi*[i,z] * W / ln 2``.
    """
    bank = utilities if isinstance(utilities, UtilityBank) else UtilityBank(utilities)
    P = np.asarray(P, dtype=float)
    phi_star = np.asarray(phi_star, dtype=float)
    serving = np.asarray(serving)
    rates = ue_rates(P, phi_star, gains, serving, rb_bandwidth)
    if np.any(rates <= 0):
        grad = np.full(P.shape, np.nan)
        return grad if b is None else float("nan")
    ratio = bank.ratio(rates, r_floor=_TINY)  # (U,)
    weighted = ratio[:, None] * phi_star * (rb_bandwidth / LN2)  # (U, Z)
    A = np.zeros_like(P)
    np.add.at(A, serving, weighted)
    own, total, excl = _interference_terms(P, gains)
    g_diag = np.einsum("bbz->bz", gains.g)
    grad = A * g_diag / total
    C = A * g_diag * P / (excl * total)  # (B, Z), indexed by o
    cross = np.einsum("oz,obz->bz", C, gains.g) - C * g_diag
    grad = grad - cross
    if b is not None:
        return float(grad[b, rb])
    return grad


def power_update(P_slot, grads, alpha: float, budget: float) -> np.ndarray:
    """Gradient step on one (eNodeB, slot) block followed by projection.

    ``candidate = max(P + alpha * grad, 0)``; returned as is when it fits
    the budget, otherwise rescaled to sum exactly to ``budget``.
    """
    if alpha < 0 or not budget > 0:
        raise ValueError(f"need alpha >= 0 and budget > 0, got alpha={alpha}, budget={budget}")
    candidate = np.maximum(np.asarray(P_slot, dtype=float) + alpha * np.asarray(grads, dtype=float), 0.0)
    total = candidate.sum(axis=-1, keepdims=True)
    over = total > budget
    return np.where(over, budget * candidate / np.where(over, total, 1.0), candidate)


def default_alpha(grad, budget: float, scale: float = 1e-3) -> float:
    """Step size ``scale * budget / max|grad|``."""
    g = float(np.max(np.abs(grad)))
    return scale * budget / g if g > 0 else 0.0


def iterate_power(P0, phi_star, gains, utilities, serving, grid: RbGrid, rb_bandwidth: float, budget: float,
                  alpha=None, max_iters: int = 10_000, tol: float = 1e-8) -> PowerResult:
    """Synchronous projected-gradient sweeps until ``|dY| < tol`` or ``max_iters``.

    Every eNodeB updates from the gradient at the pre-sweep powers. Returns
    the final powers and the objective after each sweep (``trace[0]`` is
    the starting value).
    """
    bank = utilities if isinstance(utilities, UtilityBank) else UtilityBank(utilities)
    P = np.array(P0, dtype=float)
    if np.any(P < 0) or np.any(slot_view(P, grid).sum(axis=-1) > budget * (1 + 1e-12)):
        raise ValueError("initial powers are infeasible")
    y = objective_Y(P, phi_star, gains, bank, serving, rb_bandwidth)
    if not np.isfinite(y):
        raise ValueError("objective is not finite at the initial powers")
    grad = gradient_Y(P, phi_star, gains, bank, serving, rb_bandwidth)
    if alpha is None:
        alpha = default_alpha(grad, budget)
    trace = [y]
    converged = False
    for _ in range(max_iters):
        new = power_update(slot_view(P, grid), slot_view(grad, grid), alpha, budget).reshape(P.shape)
        y_new = objective_Y(new, phi_star, gains, bank, serving, rb_bandwidth)
        if not np.isfinite(y_new):
            break
        P = new
        trace.append(y_new)
        if abs(y_new - y) < tol:
            converged = True
            break
        y = y_new
        grad = gradient_Y(P, phi_star, gains, bank, serving, rb_bandwidth)
    return PowerResult(P, trace, float(alpha), converged)
