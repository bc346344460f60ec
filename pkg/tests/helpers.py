"""Independent reference implementations used as test oracles."""

import numpy as np

from lte_appsched.scheduler import RUNNING, ScheduleState, select_ue_app_aware, update_phi
from lte_appsched.utility import derivative, evaluate


def reference_frame(state: ScheduleState, H, ratio_fns):
    """One frame for a single cell written directly from the algorithm listing.

    ``ratio_fns[i](r)`` returns UE ``i``'s marginal ratio; weighted PF is
    expressed through it as ``w / r``. Returns the per-RB assignment.
    """
    H = np.asarray(H, dtype=float)
    n_ues, n_rbs = H.shape
    r_start = np.sum(state.phi * H, axis=-1)
    assignment = []
    for z in range(n_rbs):
        if state.rate_update == RUNNING:
            r = np.sum(state.phi * H, axis=-1)
        else:
            r = r_start
        r = np.maximum(r, state.r_floor)
        scores = np.array([ratio_fns[i](r[i]) * H[i, z] for i in range(n_ues)])
        ue = int(np.argmax(scores))
        update_phi(state, z, ue)
        assignment.append(ue)
    state.r = np.sum(state.phi * H, axis=-1)
    state.k += 1
    return np.array(assignment)


def scaled_ratio(u, scale):
    """``(s U)' / (s U)`` computed literally, without cancelling ``s``."""
    return lambda r: (scale * derivative(u, r)) / (scale * evaluate(u, r))


def replay(assignments, n_ues):
    """Rebuild phi from an assignment log ``(frames, n_rbs)`` via the recurrence."""
    assignments = np.asarray(assignments)
    n_rbs = assignments.shape[1]
    phi = np.zeros((n_ues, n_rbs))
    for k, row in enumerate(assignments, start=1):
        for z, ue in enumerate(row):
            phi[:, z] *= (k - 1) / k
            phi[ue, z] += 1.0 / k
    return phi


def brute_force_2x2(H, utilities, n=200):
    """Maximize ``prod_i U_i(sum_z phi H)`` over an ``n x n`` grid.

    UE 1 holds shares ``(x, y)`` of the two RBs and UE 2 the remainder.
    Returns the maximizing ``(x, y)`` and the grid spacing.
    """
    H = np.asarray(H, dtype=float)
    grid = np.linspace(0.0, 1.0, n)
    x, y = np.meshgrid(grid, grid, indexing="ij")
    r1 = x * H[0, 0] + y * H[0, 1]
    r2 = (1 - x) * H[1, 0] + (1 - y) * H[1, 1]
    with np.errstate(divide="ignore"):
        obj = np.log(evaluate(utilities[0], r1)) + np.log(evaluate(utilities[1], r2))
    i, j = np.unravel_index(np.argmax(obj), obj.shape)
    return np.array([grid[i], grid[j]]), grid[1] - grid[0]


def argmax_app_aware(rates, H_col, utilities, r_floor):
    return select_ue_app_aware(rates, H_col, utilities, r_floor)
