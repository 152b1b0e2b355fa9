"""Noise generation, SNR accounting, delta sweeps and rate fitting.

All randomness flows through explicit seeds. Independent cells of an
experiment draw from substreams whose seeds are derived by hashing
(base_seed, delta index, realization index), so any cell can be recomputed
in isolation and reruns are bitwise reproducible. Normal variates are
produced by the Box-Muller transform of the generator's uniform output.
"""

from __future__ import annotations

import hashlib
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailureError
from .grid import shepp_logan
from .linop import DiagonalOperator
from .mlp import MlpArchitecture
from .nnsolver import NnReconstructionConfig, reconstruct_nn
from .radon import RadonGeometry, radon_forward, radon_operator
from .rules import alpha_of_delta
from .tikhonov import TikhonovProblem, solve_tikhonov


def substream_seed(base_seed, *parts):
    """Derived 64-bit seed for an experiment cell.

    Hashes the decimal rendering "base:part1:part2:..." with SHA-256 and
    takes the first 8 bytes little-endian; stable across platforms and
    runs.
    """
    text = ":".join(str(int(p)) for p in (base_seed, *parts))
    return int.from_bytes(hashlib.sha256(text.encode("ascii")).digest()[:8], "little")


def standard_normal(rng, n):
    """n i.i.d. standard normal variates via Box-Muller on rng.random().

    z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2),
    with u1 mapped to (0, 1] so the log is finite.
    """
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]


@dataclass(frozen=True)
class NoiseSpec:
    """Noise scale and substream seed for one data realization."""

    delta: float
    seed: int

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")


def add_noise(y, spec: NoiseSpec):
    """y + delta * n with n i.i.d. standard normal from the seeded stream."""
    y = np.asarray(y, dtype=np.float64)
    if spec.delta == 0.0:
        return y.copy()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    return y + spec.delta * standard_normal(rng, y.size)


def snr_db(y, delta):
    """Data signal-to-noise ratio 20 log10(||y|| / (sqrt(M) delta)) in dB."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    y = np.asarray(y, dtype=np.float64)
    norm = np.linalg.norm(y)
    if norm == 0:
        raise ValueError("snr undefined for zero data")
    return 20.0 * np.log10(norm / (np.sqrt(y.size) * delta))


def delta_for_snr(y, target_db):
    """Noise scale realizing a target SNR: delta = ||y|| / (sqrt(M) 10^(t/20))."""
    y = np.asarray(y, dtype=np.float64)
    norm = np.linalg.norm(y)
    if norm == 0:
        raise ValueError("snr undefined for zero data")
    return float(norm / (np.sqrt(y.size) * 10.0 ** (target_db / 20.0)))


def deltas_for_snr_range(y, snr_min_db, snr_max_db, count):
    """Strictly decreasing noise scales spanning [snr_min_db, snr_max_db].

    SNR targets are equispaced in dB (so the deltas are log-spaced), from
    the noisiest (snr_min_db) to the cleanest level.
    """
    if count < 2:
        raise ValueError(f"need at least two levels, got {count}")
    if snr_min_db >= snr_max_db:
        raise ValueError("snr_min_db must be below snr_max_db")
    targets = np.linspace(snr_min_db, snr_max_db, count)
    return [delta_for_snr(y, t) for t in targets]


def sweep_deltas(nx, n_angles, snr_min_db, snr_max_db, count,
                 det_halfwidth=float(np.sqrt(2.0)), n_bins=None):
    """Noise levels for a phantom sweep, derived from the clean sinogram."""
    geom = RadonGeometry.for_grid(nx, n_angles, det_halfwidth=det_halfwidth)
    if n_bins is not None:
        geom = RadonGeometry(
            n_angles=geom.n_angles, n_bins=n_bins,
            det_halfwidth=geom.det_halfwidth, step=geom.step,
        )
    y = radon_forward(shepp_logan(nx, nx), geom).values
    return deltas_for_snr_range(y, snr_min_db, snr_max_db, count)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(error) against log(delta), natural logs."""

    slope: float
    intercept: float
    residual_norm: float
    n_points: int


def fit_rate(deltas, errors) -> RateFit:
    """Ordinary least squares in log-log coordinates."""
    deltas = np.asarray(deltas, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if deltas.size != errors.size or deltas.size < 2:
        raise ValueError("need matching delta/error arrays with at least two points")
    if np.any(deltas <= 0) or np.any(errors <= 0):
        raise ValueError("deltas and errors must be positive")
    lx, ly = np.log(deltas), np.log(errors)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.linalg.norm(ly - (slope * lx + intercept)))
    return RateFit(
        slope=float(slope), intercept=float(intercept),
        residual_norm=residual, n_points=deltas.size,
    )


@dataclass
class ExperimentRecord:
    """Per-(delta, realization) results of an alpha sweep."""

    delta: float
    seed: int
    alphas: np.ndarray
    errors: np.ndarray
    best_alpha: float
    best_error: float
    snr_db: float

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=np.float64)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.best_error != self.errors.min():
            raise ValueError("best_error must be the minimum per-alpha error")
        winners = self.alphas[self.errors == self.best_error]
        if self.best_alpha != winners.min():
            raise ValueError("best_alpha must be the smallest alpha attaining the minimum")


@dataclass(frozen=True)
class CellFailure:
    delta: float
    seed: int
    message: str


@dataclass(frozen=True)
class DeltaAggregate:
    delta: float
    mean_error: float
    std_error: float
    n_realizations: int


@dataclass
class NnSettings:
    """Network reconstruction settings used inside a sweep."""

    hidden_widths: tuple[int, ...] = (100, 100, 100, 100)
    iterations: int = 5000
    learning_rate: float = 1e-3
    weight_bound: float | None = None
    leak: float = 0.01


@dataclass
class SweepConfig:
    """Full protocol: noise levels, realizations, alpha grid, method.

    ``alphas`` fixes one grid for every cell; when None, each delta gets
    ``n_alphas`` log-spaced values centered on alpha = delta and spanning
    ``alpha_span_decades`` decades each side. Deltas must be strictly
    decreasing.
    """

    deltas: list
    n_realizations: int
    method: str = "tikhonov"
    nx: int = 64
    ny: int = 64
    n_angles: int = 30
    det_halfwidth: float = float(np.sqrt(2.0))
    n_bins: int | None = None
    base_seed: int = 0
    alphas: list | None = None
    n_alphas: int = 20
    alpha_span_decades: float = 1.5
    cg_tol: float = 1e-10
    cg_max_iter: int = 2000
    nn: NnSettings = field(default_factory=NnSettings)

    def __post_init__(self):
        self.deltas = [float(d) for d in self.deltas]
        if not self.deltas or any(d <= 0 for d in self.deltas):
            raise ValueError("deltas must be a nonempty list of positive values")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("deltas must be strictly decreasing")
        if self.n_realizations < 1:
            raise ValueError("need at least one realization")
        if self.method not in ("tikhonov", "nn"):
            raise ValueError(f"method must be 'tikhonov' or 'nn', got {self.method!r}")
        if self.alphas is not None:
            self.alphas = [float(a) for a in self.alphas]
            if not self.alphas or any(a <= 0 for a in self.alphas):
                raise ValueError("alphas must be positive")

    def alpha_grid(self, delta):
        """Ascending alpha grid for one noise level."""
        if self.alphas is not None:
            return np.sort(np.asarray(self.alphas, dtype=np.float64))
        lo = np.log10(delta) - self.alpha_span_decades
        hi = np.log10(delta) + self.alpha_span_decades
        return np.logspace(lo, hi, self.n_alphas)

    def geometry(self) -> RadonGeometry:
        geom = RadonGeometry.for_grid(self.nx, self.n_angles, det_halfwidth=self.det_halfwidth)
        if self.n_bins is not None:
            geom = RadonGeometry(
                n_angles=geom.n_angles,
                n_bins=self.n_bins,
                det_halfwidth=geom.det_halfwidth,
                step=geom.step,
            )
        return geom


@dataclass
class SweepResult:
    method: str
    records: list
    aggregates: list
    failures: list
    failed_deltas: list
    fit: RateFit | None


def _tikhonov_cell(op, y_noisy, alphas, truth, cfg):
    """Errors over the alpha grid; solves share warm starts, largest alpha first."""
    errors = np.empty(alphas.size)
    x0 = None
    for j in range(alphas.size - 1, -1, -1):
        problem = TikhonovProblem(op=op, data=y_noisy, alpha=float(alphas[j]))
        result = solve_tikhonov(problem, tol=cfg.cg_tol, max_iter=cfg.cg_max_iter, x0=x0)
        x0 = result.x
        errors[j] = np.linalg.norm(truth - result.x)
    return errors


def _nn_cell(op, y_noisy, alphas, truth, cfg, seed):
    errors = np.empty(alphas.size)
    arch = MlpArchitecture(hidden_widths=cfg.nn.hidden_widths, leak=cfg.nn.leak)
    for j, alpha in enumerate(alphas):
        nn_cfg = NnReconstructionConfig(
            architecture=arch,
            alpha=float(alpha),
            operator=op,
            data=y_noisy,
            nx=cfg.nx,
            ny=cfg.ny,
            iterations=cfg.nn.iterations,
            learning_rate=cfg.nn.learning_rate,
            seed=seed,
            weight_bound=cfg.nn.weight_bound,
        )
        recon = reconstruct_nn(nn_cfg)
        errors[j] = np.linalg.norm(truth - recon.image.values)
    return errors


def run_sweep(cfg: SweepConfig, threads=1) -> SweepResult:
    """Run the full protocol and aggregate oracle-selected errors.

    For each (delta, realization) cell: draw data noise from the cell's
    substream, reconstruct for every alpha on the grid, record the error
    ||truth - reconstruction|| per alpha and keep the oracle minimum.
    Aggregates are mean and population standard deviation of the best
    error across realizations. Cells that fail numerically are recorded
    and skipped; deltas with no surviving cell are excluded from the rate
    fit and flagged.
    """
    phantom = shepp_logan(cfg.nx, cfg.ny)
    truth = phantom.values
    geom = cfg.geometry()
    y_clean = radon_forward(phantom, geom).values
    op = radon_operator(geom, cfg.nx, cfg.ny)

    cells = [
        (i, r, substream_seed(cfg.base_seed, i, r))
        for i in range(len(cfg.deltas))
        for r in range(cfg.n_realizations)
    ]

    def run_cell(cell):
        i, r, seed = cell
        delta = cfg.deltas[i]
        alphas = cfg.alpha_grid(delta)
        y_noisy = add_noise(y_clean, NoiseSpec(delta=delta, seed=seed))
        try:
            if cfg.method == "tikhonov":
                errors = _tikhonov_cell(op, y_noisy, alphas, truth, cfg)
            else:
                errors = _nn_cell(op, y_noisy, alphas, truth, cfg, seed)
        except NumericalFailureError as exc:
            return i, CellFailure(delta=delta, seed=seed, message=str(exc))
        best = errors.min()
        best_alpha = alphas[errors == best].min()
        record = ExperimentRecord(
            delta=delta,
            seed=seed,
            alphas=alphas,
            errors=errors,
            best_alpha=float(best_alpha),
            best_error=float(best),
            snr_db=float(snr_db(y_clean, delta)),
        )
        return i, record

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_cell, cells))
    else:
        outcomes = [run_cell(c) for c in cells]

    records, failures = [], []
    per_delta = {i: [] for i in range(len(cfg.deltas))}
    for i, outcome in outcomes:
        if isinstance(outcome, CellFailure):
            failures.append(outcome)
        else:
            records.append(outcome)
            per_delta[i].append(outcome.best_error)

    aggregates, failed_deltas = [], []
    for i, delta in enumerate(cfg.deltas):
        best = per_delta[i]
        if not best:
            failed_deltas.append(delta)
            continue
        aggregates.append(
            DeltaAggregate(
                delta=delta,
                mean_error=float(np.mean(best)),
                std_error=float(np.std(best)),
                n_realizations=len(best),
            )
        )

    fit = None
    if len(aggregates) >= 2:
        fit = fit_rate([a.delta for a in aggregates], [a.mean_error for a in aggregates])
    return SweepResult(
        method=cfg.method,
        records=records,
        aggregates=aggregates,
        failures=failures,
        failed_deltas=failed_deltas,
        fit=fit,
    )


@dataclass
class LinearOracleResult:
    fit: RateFit
    deltas: np.ndarray
    errors: np.ndarray
    alphas: np.ndarray
    mu: float


def linear_oracle(mu, n_dim, deltas, seed=0, tol=1e-12, max_iter=10000) -> LinearOracleResult:
    """Measure the convergence rate on a diagonal operator with known source element.

    The operator has singular values s_k = 1/k. The exact solution is
    x = (A^T A)^mu v where v is a random-sign unit vector with spectral
    envelope k^-(mu - 1/2); this envelope saturates the source condition,
    so the measured rate tracks the predicted delta^(2 mu / (2 mu + 1))
    instead of the faster decay a generic (isotropic) v exhibits. Each
    noisy datum is y + delta * n / ||n||, i.e. a perturbation of norm
    exactly delta as in the delta-ball noise model, with n drawn from the
    per-delta substream. alpha = delta^(2 / (2 mu + 1)).
    """
    if not 0.5 <= mu <= 1.0:
        raise ValueError(f"mu must be in [1/2, 1], got {mu}")
    if n_dim < 10:
        raise ValueError(f"n_dim must be >= 10, got {n_dim}")
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=np.float64)
    if deltas.size < 2 or np.any(deltas <= 0):
        raise ValueError("need at least two positive deltas")
    if deltas.max() / deltas.min() < 1e3:
        raise ValueError("deltas should span at least three decades")

    k = np.arange(1, n_dim + 1, dtype=np.float64)
    op = DiagonalOperator(1.0 / k)
    rng_v = np.random.Generator(np.random.PCG64(substream_seed(seed, 0, 0)))
    v = k ** -(mu - 0.5) * np.where(rng_v.random(n_dim) < 0.5, -1.0, 1.0)
    v /= np.linalg.norm(v)
    x_dagger = op.singular_values ** (2.0 * mu) * v
    y = op.apply(x_dagger)

    errors = np.empty(deltas.size)
    alphas = np.empty(deltas.size)
    for i, delta in enumerate(deltas):
        rng = np.random.Generator(np.random.PCG64(substream_seed(seed, i, 1)))
        n = standard_normal(rng, n_dim)
        y_noisy = y + delta * n / np.linalg.norm(n)
        alpha = alpha_of_delta(delta, rule="holder", mu=mu)
        problem = TikhonovProblem(op=op, data=y_noisy, alpha=alpha)
        result = solve_tikhonov(problem, tol=tol, max_iter=max_iter)
        errors[i] = np.linalg.norm(result.x - x_dagger)
        alphas[i] = alpha

    fit = fit_rate(deltas, errors)
    return LinearOracleResult(fit=fit, deltas=deltas, errors=errors, alphas=alphas, mu=mu)


def results_csv(records, method):
    """Per-(delta, realization, alpha) table: delta,seed,alpha,error,snr_db,method."""
    out = io.StringIO()
    out.write("delta,seed,alpha,error,snr_db,method\n")
    for rec in records:
        for alpha, err in zip(rec.alphas, rec.errors):
            out.write(
                f"{rec.delta!r},{rec.seed},{float(alpha)!r},{float(err)!r},{rec.snr_db!r},{method}\n"
            )
    return out.getvalue()


def aggregate_csv(aggregates, method):
    """Per-delta table: delta,mean_error,std_error,method."""
    out = io.StringIO()
    out.write("delta,mean_error,std_error,method\n")
    for agg in aggregates:
        out.write(f"{agg.delta!r},{agg.mean_error!r},{agg.std_error!r},{method}\n")
    return out.getvalue()


def fits_csv(entries):
    """Fits table from (method, RateFit) pairs: method,slope,intercept,residual."""
    out = io.StringIO()
    out.write("method,slope,intercept,residual\n")
    for method, fit in entries:
        out.write(f"{method},{fit.slope!r},{fit.intercept!r},{fit.residual_norm!r}\n")
    return out.getvalue()
