"""
Runtime checks of the per-iteration inequalities of the inertial projection method.

In ``checked`` mode every iteration is verified; ``fast`` mode samples every
10th iteration. Gamma_n and the Fejer gap are recorded whenever a solution is
known, for every method, but violations are only counted for the projection
methods.
"""

import logging
from typing import Callable, Dict, List, Optional

import numpy as np

from .core import DenseVector, InvariantViolation, SolverConfig, inner_product, norm

logger = logging.getLogger('vibench.invariants')

FAST_MODE_STRIDE = 10
LOWER_BOUND_RTOL = 1e-10
SEPARATION_TOL = 1e-10
DESCENT_RTOL = 1e-8
ROUNDING_FLOOR = 1e-13
VANISHING_FACTOR = 10.0


def gamma_quantity(x: DenseVector, x_prev: DenseVector, alpha: float, x_star: DenseVector) -> float:
    """Gamma = ||x - x*||^2 - alpha ||x_prev - x*||^2 + 2 alpha ||x - x_prev||^2."""
    d = x - x_prev
    return (inner_product(x - x_star, x - x_star)
            - alpha * inner_product(x_prev - x_star, x_prev - x_star)
            + 2.0 * alpha * inner_product(d, d))


def _sq(v: DenseVector) -> float:
    return float(np.dot(v, v))


class InvariantChecker:
    """Collects InvariantViolations while a run progresses.

    ``alpha`` maps n to the inertial factor the method actually used, so the
    non-inertial ablation and the baselines get the right Gamma_n.
    """

    def __init__(self, F, cfg: SolverConfig, x_star: Optional[DenseVector] = None,
                 alpha: Optional[Callable[[int], float]] = None, enforce: bool = True):
        self.F = F
        self.cfg = cfg
        self.x_star = x_star
        self.alpha = alpha or cfg.alpha_schedule
        self.enforce = enforce
        self.stride = 1 if cfg.mode == "checked" else FAST_MODE_STRIDE
        self.violations: List[InvariantViolation] = []

    def _flag(self, n: int, name: str, detail: str) -> None:
        violation = InvariantViolation(n, name, detail)
        self.violations.append(violation)
        logger.warning(f"Invariant '{name}' violated at n={n}: {detail}")

    def observe(self, state, result) -> Dict[str, Optional[float]]:
        """Check one step (state -> result.state) and return the record extras."""
        n = state.n
        new = result.state
        extras: Dict[str, Optional[float]] = {}

        if self.x_star is not None:
            x_star = self.x_star
            extras['gamma_n'] = gamma_quantity(state.x_curr, state.x_prev, self.alpha(n), x_star)
            extras['fejer_gap'] = _sq(new.w - x_star) - _sq(new.x_curr - new.w) - _sq(new.x_curr - x_star)

        if not self.enforce or result.ls is None or n % self.stride != 0:
            return extras

        self._check_line_search(n, new, result.ls)
        if self.x_star is not None:
            self._check_separation(n, new, result.ls)
            self._check_fejer(n, new)
            self._check_gamma(n, state, new, extras['gamma_n'])
        return extras

    def _check_line_search(self, n: int, new, ls) -> None:
        cfg = self.cfg
        r = new.w - new.z
        if ls.eta != cfg.gamma ** ls.m:
            self._flag(n, "line_search_step", f"eta={ls.eta!r} but gamma^{ls.m}={cfg.gamma ** ls.m!r}")
        if not ls.lhs >= ls.threshold:
            self._flag(n, "line_search_accept", f"<F(y), r> = {ls.lhs:.6g} < {ls.threshold:.6g}")
        if ls.m >= 1:
            y_before = new.w - cfg.gamma ** (ls.m - 1) * r
            lhs_before = inner_product(self.F(y_before), r)
            if lhs_before >= ls.threshold:
                self._flag(n, "line_search_minimality",
                           f"m={ls.m} - 1 already satisfies the Armijo condition ({lhs_before:.6g})")

        # h_n(w_n) >= (sigma eta / 2) ||r||^2
        h_w = inner_product(ls.fy, new.w - new.y)
        bound = 0.5 * cfg.sigma_ls * ls.eta * _sq(r)
        slack = LOWER_BOUND_RTOL * max(abs(bound), abs(h_w)) \
            + ROUNDING_FLOOR * norm(ls.fy) * (norm(new.w) + norm(new.y))
        if h_w < bound - slack:
            self._flag(n, "cut_lower_bound", f"h(w)={h_w:.6g} < {bound:.6g}")

    def _check_separation(self, n: int, new, ls) -> None:
        # h_n(x*) <= 0: the cutting halfspace keeps every solution
        h_star = inner_product(ls.fy, self.x_star - new.y)
        tol = SEPARATION_TOL * max(1.0, norm(ls.fy) * norm(self.x_star - new.y))
        if h_star > tol:
            self._flag(n, "cut_separation", f"h(x*)={h_star:.6g} > 0")

    def _check_fejer(self, n: int, new) -> None:
        dist_w = _sq(new.w - self.x_star)
        lhs = _sq(new.x_curr - self.x_star)
        rhs = dist_w - _sq(new.x_curr - new.w)
        if lhs > rhs + DESCENT_RTOL * max(dist_w, ROUNDING_FLOOR):
            self._flag(n, "fejer_descent", f"||x+ - x*||^2={lhs:.6g} > {rhs:.6g}")

    def _check_gamma(self, n: int, state, new, gamma_n: float) -> None:
        alpha_cap = self.cfg.alpha_schedule.cap
        gamma_next = gamma_quantity(new.x_curr, new.x_prev, self.alpha(n + 1), self.x_star)
        decrease = (1.0 - 3.0 * alpha_cap) * _sq(new.x_curr - state.x_curr)
        scale = max(_sq(state.x_prev - self.x_star), _sq(state.x_curr - self.x_star),
                    _sq(new.x_curr - self.x_star), abs(gamma_n), ROUNDING_FLOOR)
        if gamma_next - gamma_n + decrease > DESCENT_RTOL * scale:
            self._flag(n, "gamma_monotone",
                       f"Gamma_(n+1)={gamma_next:.6g} > Gamma_n - (1-3a)||dx||^2 = {gamma_n - decrease:.6g}")


def vanishing_quantities(state, record, cfg: SolverConfig) -> Dict[str, object]:
    """End-of-run values of ||x_{n+1} - w_n|| and ||w_n - z_n|| against 10 * tol."""
    step_to_w = norm(state.x_curr - state.w) if state.w is not None else float("nan")
    limit = VANISHING_FACTOR * cfg.tol
    return {
        'final_step_to_w': step_to_w,
        'final_residual': record.residual,
        'vanishing_ok': bool(step_to_w < limit and record.residual < limit),
    }
