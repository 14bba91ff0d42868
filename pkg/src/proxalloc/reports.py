"""Solver observability record shared by every iterative engine."""

from dataclasses import dataclass, field

import numpy as np

CONVERGED = "converged"
MAX_ITER = "max_iter"
DIVERGED = "diverged"


@dataclass
class SolverReport:
    """What an iterative solve did: counts, residual traces, status.

    ``iterations`` counts ADMM iterations or CCD/Dykstra cycles.  The
    residual traces have one entry per iteration; ``primal_residuals``
    holds ||r||_2 for ADMM and the per-cycle max coordinate change for
    the cyclic engines.  ``iterates`` is only populated when a solve is
    asked to record its trajectory.
    """

    status: str = CONVERGED
    iterations: int = 0
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    iterates: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status == CONVERGED

    @property
    def primal_residual(self):
        return self.primal_residuals[-1] if self.primal_residuals else np.nan

    @property
    def dual_residual(self):
        return self.dual_residuals[-1] if self.dual_residuals else np.nan
