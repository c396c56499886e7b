"""Limited-memory quasi-Newton minimization with Armijo backtracking.

Drives any (objective, gradient) callable pair over a flat parameter vector.
The implementation is the standard two-loop recursion over the most recent
curvature pairs, with the initial Hessian scaled by ``<s, y> / <y, y>``.
Everything is plain float64 numpy, so identical inputs give bit-identical
outputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError


class Termination(enum.Enum):
    GRAD_TOLERANCE = "GradTolerance"
    OBJ_TOLERANCE = "ObjTolerance"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILURE = "LineSearchFailure"


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters; defaults suit all objectives in this package."""

    memory_pairs: int = 10
    max_iterations: int = 1000
    grad_inf_tolerance: float = 1e-6
    rel_obj_tolerance: float = 1e-10
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40
    initial_step: float = 1.0

    def __post_init__(self):
        if self.memory_pairs < 1:
            raise DomainError("memory_pairs must be >= 1")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not 0.0 < self.armijo_c1 < 1.0:
            raise DomainError("armijo_c1 must be in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise DomainError("backtrack_factor must be in (0, 1)")
        if self.max_backtracks < 1:
            raise DomainError("max_backtracks must be >= 1")
        if not self.initial_step > 0.0:
            raise DomainError("initial_step must be > 0")


@dataclass
class SolveTrace:
    """What happened during a solve; ``objective_history`` is non-increasing."""

    iterations: int
    objective_history: list[float]
    final_grad_inf_norm: float
    termination_reason: Termination


def _direction(grad, s_list, y_list, rho_list):
    """Two-loop recursion; returns a descent direction candidate."""
    q = grad.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    if s_list:
        gamma = float(s_list[-1] @ y_list[-1]) / float(y_list[-1] @ y_list[-1])
        q *= gamma
    for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
        beta = rho * float(y @ q)
        q += (a - beta) * s
    return -q


def minimize(objective_fn, gradient_fn, start, cfg: SolverConfig | None = None):
    """Minimize ``objective_fn`` from ``start``.

    Parameters
    ----------
    objective_fn, gradient_fn:
        Callables over a 1-D float64 point; the gradient may be a subgradient
        for non-smooth objectives, in which case a failed line search is a
        benign terminal state near the optimum.
    start:
        Initial point; the objective must be finite there.

    Returns
    -------
    (point, SolveTrace):
        The best point seen and the solve trace.
    """
    cfg = cfg or SolverConfig()
    x = np.array(start, dtype=np.float64).ravel()
    f = float(objective_fn(x))
    if not np.isfinite(f):
        raise NumericalError(f"objective is not finite at the start point: {f}")
    g = np.asarray(gradient_fn(x), dtype=np.float64).ravel()

    history = [f]
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    reason = Termination.MAX_ITERATIONS
    iterations = 0

    for _ in range(cfg.max_iterations):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= cfg.grad_inf_tolerance:
            reason = Termination.GRAD_TOLERANCE
            break

        p = _direction(g, s_list, y_list, rho_list)
        gtp = float(g @ p)
        if not np.isfinite(gtp) or gtp >= 0.0:
            # Memory built from subgradients can stop being useful; restart
            # from steepest descent.
            s_list.clear()
            y_list.clear()
            rho_list.clear()
            p = -g
            gtp = float(g @ p)

        step = cfg.initial_step
        accepted = False
        for _ in range(cfg.max_backtracks):
            x_new = x + step * p
            f_new = float(objective_fn(x_new))
            if np.isfinite(f_new) and f_new <= f + cfg.armijo_c1 * step * gtp:
                accepted = True
                break
            step *= cfg.backtrack_factor
        if not accepted:
            reason = Termination.LINE_SEARCH_FAILURE
            break

        g_new = np.asarray(gradient_fn(x_new), dtype=np.float64).ravel()
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > cfg.memory_pairs:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)

        obj_drop = f - f_new
        x, f, g = x_new, f_new, g_new
        history.append(f)
        iterations += 1
        if obj_drop <= cfg.rel_obj_tolerance * max(1.0, abs(f)):
            reason = Termination.OBJ_TOLERANCE
            break

    trace = SolveTrace(
        iterations=iterations,
        objective_history=history,
        final_grad_inf_norm=float(np.max(np.abs(g))) if g.size else 0.0,
        termination_reason=reason,
    )
    return x, trace
