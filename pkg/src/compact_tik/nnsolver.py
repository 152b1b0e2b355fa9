"""Network-parametrized regularized reconstruction.

Instead of minimizing the Tikhonov functional over all images, the image
is the output of a coordinate MLP evaluated on the pixel-center grid, and
the functional

    J(omega) = ||R x_omega - y^d||^2 + alpha ||x_omega||^2

is minimized over the network parameters with full-batch Adam. The final
ReLU keeps every reconstruction in the nonnegative orthant; an optional
box bound on the parameters (enforced by clamping after each step) keeps
them inside the compact solution set.

The data-term gradient is routed through the verified adjoint: the
image-space cotangent 2 R^T (R x - y^d) + 2 alpha x is handed to the
network backward pass; by linearity of R this equals differentiating
through the projector itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError
from .grid import ImageGrid, pixel_centers
from .mlp import (
    AdamState,
    MlpArchitecture,
    adam_step,
    init_params,
    mlp_backward,
    mlp_forward,
    project_weights,
)


@dataclass
class NnReconstructionConfig:
    """Everything a single network reconstruction depends on.

    ``operator`` must have domain dimension nx * ny. ``weight_bound`` None
    reproduces unconstrained training; a finite value clamps parameters to
    [-c, c] after every step.
    """

    architecture: MlpArchitecture
    alpha: float
    operator: object
    data: np.ndarray
    nx: int
    ny: int
    iterations: int = 5000
    learning_rate: float = 1e-3
    seed: int = 0
    weight_bound: float | None = None
    trace_path: str | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.operator.domain_dim != self.nx * self.ny:
            raise ValueError(
                f"operator domain {self.operator.domain_dim} != grid size {self.nx * self.ny}"
            )
        self.data = np.asarray(self.data, dtype=np.float64).ravel()
        if self.data.size != self.operator.range_dim:
            raise ValueError(
                f"data length {self.data.size} != operator range {self.operator.range_dim}"
            )


@dataclass
class NnReconstruction:
    """Best-objective iterate of the optimization."""

    image: ImageGrid
    params: object
    objective_trace: np.ndarray
    final_objective: float
    best_iteration: int


def _objective_and_cotangent(op, data, alpha, x):
    residual = op.apply(x) - data
    objective = float(residual @ residual + alpha * (x @ x))
    cotangent = 2.0 * op.apply_adjoint(residual) + 2.0 * alpha * x
    return objective, cotangent


def reconstruct_nn(cfg: NnReconstructionConfig) -> NnReconstruction:
    """Run the full-batch optimization loop and return the best iterate.

    The objective trace has ``iterations + 1`` entries (initial value
    included). Adam is not monotone, so the returned image is the one with
    the smallest objective seen, not the last.
    """
    coords = pixel_centers(cfg.nx, cfg.ny)
    op, data, alpha = cfg.operator, cfg.data, cfg.alpha
    params = init_params(cfg.architecture, cfg.seed, weight_bound=cfg.weight_bound)
    state = AdamState.for_params(params, learning_rate=cfg.learning_rate)

    trace = np.empty(cfg.iterations + 1)
    best_objective = np.inf
    best_params = params
    best_image = None
    best_iteration = 0

    for it in range(cfg.iterations + 1):
        x = mlp_forward(params, coords)
        objective, cotangent = _objective_and_cotangent(op, data, alpha, x)
        if not np.isfinite(objective):
            raise NumericalFailureError(f"non-finite objective at iteration {it}")
        trace[it] = objective
        if objective < best_objective:
            best_objective = objective
            best_params = params.copy()
            best_image = x
            best_iteration = it
        if it == cfg.iterations:
            break
        grads = mlp_backward(params, coords, cotangent)
        params, state = adam_step(params, grads, state)
        if cfg.weight_bound is not None:
            params = project_weights(params, cfg.weight_bound)

    if cfg.trace_path is not None:
        with open(cfg.trace_path, "w") as f:
            f.write("# iteration objective\n")
            for it, value in enumerate(trace):
                f.write(f"{it} {float(value)!r}\n")

    return NnReconstruction(
        image=ImageGrid(nx=cfg.nx, ny=cfg.ny, values=best_image),
        params=best_params,
        objective_trace=trace,
        final_objective=best_objective,
        best_iteration=best_iteration,
    )
