"""Command-line entry point for the reconstruction and rate-study pipeline.

Configuration is line-oriented ``key = value`` under ``[subcommand]``
section headers; command-line flags override file values, and defaults
fill the rest. Unknown sections or keys are hard errors. Every run writes
a manifest capturing the effective configuration (defaults materialized),
and re-running a subcommand from its manifest reproduces the outputs.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import experiment, svgplot
from .errors import NumericalFailureError
from .grid import ImageGrid, shepp_logan, write_imgf, write_pgm16
from .mlp import MlpArchitecture, save_params
from .nnsolver import NnReconstructionConfig, reconstruct_nn
from .radon import RadonGeometry, radon_forward, write_sinf
from .tikhonov import TikhonovProblem, solve_tikhonov

THREADS_ENV = "COMPACT_TIK_THREADS"


def _parse_int(s):
    return int(str(s))


def _parse_float(s):
    return float(str(s))


def _parse_str(s):
    return str(s)


def _parse_int_list(s):
    if isinstance(s, (tuple, list)):
        return tuple(int(v) for v in s)
    parts = [p.strip() for p in str(s).split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(p) for p in parts)


def _parse_opt_float(s):
    if s is None or str(s).strip().lower() == "none":
        return None
    return float(s)


def _parse_opt_int(s):
    if s is None or str(s).strip().lower() == "none":
        return None
    return int(str(s))


def _parse_opt_str(s):
    if s is None or str(s).strip().lower() == "none":
        return None
    return str(s)


def _serialize(value):
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# subcommand -> ordered {key: (parser, default, help)}
SCHEMAS = {
    "phantom": {
        "n": (_parse_int, 128, "grid size per axis"),
        "out": (_parse_str, "phantom.pgm", "output image (.pgm or .imgf)"),
    },
    "sinogram": {
        "n": (_parse_int, 128, "grid size per axis"),
        "angles": (_parse_int, 50, "number of projection angles in [0, pi)"),
        "det_halfwidth": (_parse_float, math.sqrt(2.0), "detector half-extent"),
        "delta": (_parse_float, 0.0, "noise scale (0 for clean data)"),
        "seed": (_parse_int, 0, "noise seed"),
        "out": (_parse_str, "sinogram.sinf", "output sinogram (.sinf)"),
    },
    "tikhonov": {
        "n": (_parse_int, 64, "grid size per axis"),
        "angles": (_parse_int, 30, "number of projection angles"),
        "det_halfwidth": (_parse_float, math.sqrt(2.0), "detector half-extent"),
        "alpha": (_parse_float, 1e-2, "regularization weight"),
        "delta": (_parse_float, 0.0, "noise scale"),
        "seed": (_parse_int, 0, "noise seed"),
        "tol": (_parse_float, 1e-10, "CG relative tolerance"),
        "max_iter": (_parse_int, 2000, "CG iteration cap"),
        "out": (_parse_str, "reconstruction.imgf", "output image (.imgf or .pgm)"),
    },
    "nn-reconstruct": {
        "n": (_parse_int, 64, "grid size per axis"),
        "angles": (_parse_int, 30, "number of projection angles"),
        "det_halfwidth": (_parse_float, math.sqrt(2.0), "detector half-extent"),
        "alpha": (_parse_float, 1e-2, "regularization weight"),
        "delta": (_parse_float, 0.0, "noise scale"),
        "seed": (_parse_int, 0, "noise and init seed"),
        "hidden": (_parse_int_list, (100, 100, 100, 100), "hidden layer widths"),
        "iterations": (_parse_int, 5000, "optimizer steps"),
        "learning_rate": (_parse_float, 1e-3, "Adam learning rate"),
        "weight_bound": (_parse_opt_float, None, "weight box half-width (none = unbounded)"),
        "out": (_parse_str, "nn_reconstruction.imgf", "output image (.imgf or .pgm)"),
        "trace": (_parse_opt_str, None, "objective trace output path"),
        "checkpoint": (_parse_opt_str, None, "parameter checkpoint output (.mlpw)"),
    },
    "sweep": {
        "method": (_parse_str, "tikhonov", "reconstruction method: tikhonov or nn"),
        "n": (_parse_int, 64, "grid size per axis"),
        "angles": (_parse_int, 30, "number of projection angles"),
        "det_halfwidth": (_parse_float, math.sqrt(2.0), "detector half-extent"),
        "n_bins": (_parse_opt_int, None, "detector bins (none = ceil(n * det_halfwidth))"),
        "snr_min_db": (_parse_float, 16.6, "noisiest SNR level, dB"),
        "snr_max_db": (_parse_float, 42.6, "cleanest SNR level, dB"),
        "n_deltas": (_parse_int, 6, "number of noise levels"),
        "realizations": (_parse_int, 3, "noise realizations per level"),
        "n_alphas": (_parse_int, 20, "alpha grid size per level"),
        "alpha_span_decades": (_parse_float, 1.5, "alpha grid half-span around alpha = delta"),
        "seed": (_parse_int, 0, "base seed of the substream hierarchy"),
        "cg_tol": (_parse_float, 1e-10, "CG relative tolerance"),
        "cg_max_iter": (_parse_int, 2000, "CG iteration cap"),
        "nn_hidden": (_parse_int_list, (100, 100, 100, 100), "hidden widths (nn method)"),
        "nn_iterations": (_parse_int, 5000, "optimizer steps (nn method)"),
        "nn_learning_rate": (_parse_float, 1e-3, "Adam learning rate (nn method)"),
        "nn_weight_bound": (_parse_opt_float, None, "weight box half-width (nn method)"),
        "out": (_parse_str, "sweep_out", "output directory"),
    },
    "oracle-linear": {
        "mu": (_parse_float, 1.0, "source-condition exponent in [1/2, 1]"),
        "n_dim": (_parse_int, 200, "operator dimension"),
        "delta_min": (_parse_float, 1e-6, "smallest noise level"),
        "delta_max": (_parse_float, 1e-2, "largest noise level"),
        "n_deltas": (_parse_int, 9, "number of noise levels (log-spaced)"),
        "seed": (_parse_int, 0, "base seed"),
        "out": (_parse_opt_str, None, "optional output directory for tables"),
    },
    "rate-fit": {
        "table": (_parse_str, "aggregate.csv", "input table (aggregate or delta,error)"),
        "out": (_parse_opt_str, None, "optional output directory for the fits table"),
    },
    "plot": {
        "table": (_parse_str, "aggregate.csv", "aggregate table to plot"),
        "reference_exponent": (_parse_float, 2.0 / 3.0, "dashed reference slope"),
        "out": (_parse_str, "errors.svg", "output SVG path"),
    },
}


def parse_config_file(path, subcommand):
    """Read the [subcommand] section of an INI-style file.

    Returns a dict of parsed values. Unknown sections and unknown keys in
    the active section are errors; sections of other subcommands are
    allowed and ignored.
    """
    schema = SCHEMAS[subcommand]
    values = {}
    section = None
    seen_active = False
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith(("#", ";")):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in SCHEMAS:
                    raise ValueError(f"{path}:{lineno}: unknown section [{section}]")
                seen_active = seen_active or section == subcommand
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            if section is None:
                raise ValueError(f"{path}:{lineno}: key outside of any [section]")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if section != subcommand:
                continue
            if key not in schema:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r} in [{section}]")
            parser, _, _ = schema[key]
            try:
                values[key] = parser(value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values


def serialize_config(subcommand, cfg):
    """Render an effective configuration as INI text (the manifest body)."""
    lines = [f"[{subcommand}]"]
    for key in SCHEMAS[subcommand]:
        lines.append(f"{key} = {_serialize(cfg[key])}")
    return "\n".join(lines) + "\n"


def resolve_config(subcommand, args):
    """Defaults, then config file values, then explicit flags."""
    schema = SCHEMAS[subcommand]
    cfg = {key: default for key, (_, default, _) in schema.items()}
    if args.config:
        cfg.update(parse_config_file(args.config, subcommand))
    for key, (parser, _, _) in schema.items():
        flag_value = getattr(args, key.replace("-", "_"), None)
        if flag_value is not None:
            cfg[key] = parser(flag_value)
    return cfg


def _write_manifest(subcommand, cfg, path):
    with open(path, "w") as f:
        f.write(serialize_config(subcommand, cfg))


def _write_image(path, image: ImageGrid):
    if str(path).endswith(".pgm"):
        write_pgm16(path, image)
    else:
        write_imgf(path, image)


def _noisy_sinogram(cfg):
    phantom = shepp_logan(cfg["n"], cfg["n"])
    geom = RadonGeometry.for_grid(cfg["n"], cfg["angles"], det_halfwidth=cfg["det_halfwidth"])
    clean = radon_forward(phantom, geom)
    values = experiment.add_noise(
        clean.values, experiment.NoiseSpec(delta=cfg["delta"], seed=cfg["seed"])
    )
    return phantom, geom, clean, values


def cmd_phantom(cfg):
    image = shepp_logan(cfg["n"], cfg["n"])
    _write_image(cfg["out"], image)
    _write_manifest("phantom", cfg, str(cfg["out"]) + ".manifest")
    print(f"wrote {cfg['out']} ({cfg['n']}x{cfg['n']})")
    return 0


def cmd_sinogram(cfg):
    from .radon import SinogramGrid

    _, geom, clean, noisy = _noisy_sinogram(cfg)
    write_sinf(cfg["out"], SinogramGrid(geometry=geom, values=noisy))
    _write_manifest("sinogram", cfg, str(cfg["out"]) + ".manifest")
    print(f"wrote {cfg['out']} ({geom.n_bins}x{geom.n_angles} bins x angles)")
    return 0


def cmd_tikhonov(cfg):
    from .radon import radon_operator

    phantom, geom, _, noisy = _noisy_sinogram(cfg)
    op = radon_operator(geom, cfg["n"], cfg["n"])
    problem = TikhonovProblem(op=op, data=noisy, alpha=cfg["alpha"])
    result = solve_tikhonov(problem, tol=cfg["tol"], max_iter=cfg["max_iter"])
    image = ImageGrid(nx=cfg["n"], ny=cfg["n"], values=result.x)
    _write_image(cfg["out"], image)
    _write_manifest("tikhonov", cfg, str(cfg["out"]) + ".manifest")
    err = np.linalg.norm(phantom.values - result.x)
    print(f"wrote {cfg['out']}  cg_iterations={result.iterations}  error={err:.6g}")
    return 0


def cmd_nn_reconstruct(cfg):
    from .radon import radon_operator

    phantom, geom, _, noisy = _noisy_sinogram(cfg)
    op = radon_operator(geom, cfg["n"], cfg["n"])
    nn_cfg = NnReconstructionConfig(
        architecture=MlpArchitecture(hidden_widths=cfg["hidden"]),
        alpha=cfg["alpha"],
        operator=op,
        data=noisy,
        nx=cfg["n"],
        ny=cfg["n"],
        iterations=cfg["iterations"],
        learning_rate=cfg["learning_rate"],
        seed=cfg["seed"],
        weight_bound=cfg["weight_bound"],
        trace_path=cfg["trace"],
    )
    recon = reconstruct_nn(nn_cfg)
    _write_image(cfg["out"], recon.image)
    if cfg["checkpoint"]:
        save_params(cfg["checkpoint"], recon.params)
    _write_manifest("nn-reconstruct", cfg, str(cfg["out"]) + ".manifest")
    err = np.linalg.norm(phantom.values - recon.image.values)
    print(
        f"wrote {cfg['out']}  objective={recon.final_objective:.6g} "
        f"(iteration {recon.best_iteration})  error={err:.6g}"
    )
    return 0


def cmd_sweep(cfg, threads):
    os.makedirs(cfg["out"], exist_ok=True)
    deltas = experiment.sweep_deltas(
        nx=cfg["n"],
        n_angles=cfg["angles"],
        det_halfwidth=cfg["det_halfwidth"],
        n_bins=cfg["n_bins"],
        snr_min_db=cfg["snr_min_db"],
        snr_max_db=cfg["snr_max_db"],
        count=cfg["n_deltas"],
    )
    sweep_cfg = experiment.SweepConfig(
        deltas=deltas,
        n_realizations=cfg["realizations"],
        method=cfg["method"],
        nx=cfg["n"],
        ny=cfg["n"],
        n_angles=cfg["angles"],
        det_halfwidth=cfg["det_halfwidth"],
        n_bins=cfg["n_bins"],
        base_seed=cfg["seed"],
        n_alphas=cfg["n_alphas"],
        alpha_span_decades=cfg["alpha_span_decades"],
        cg_tol=cfg["cg_tol"],
        cg_max_iter=cfg["cg_max_iter"],
        nn=experiment.NnSettings(
            hidden_widths=cfg["nn_hidden"],
            iterations=cfg["nn_iterations"],
            learning_rate=cfg["nn_learning_rate"],
            weight_bound=cfg["nn_weight_bound"],
        ),
    )
    result = experiment.run_sweep(sweep_cfg, threads=threads)

    out = cfg["out"]
    with open(os.path.join(out, "results.csv"), "w") as f:
        f.write(experiment.results_csv(result.records, result.method))
    with open(os.path.join(out, "aggregate.csv"), "w") as f:
        f.write(experiment.aggregate_csv(result.aggregates, result.method))
    fits = [(result.method, result.fit)] if result.fit else []
    with open(os.path.join(out, "fits.csv"), "w") as f:
        f.write(experiment.fits_csv(fits))
    _write_manifest("sweep", cfg, os.path.join(out, "manifest.ini"))

    for failure in result.failures:
        print(f"cell failed: delta={failure.delta:.6g} seed={failure.seed}: {failure.message}",
              file=sys.stderr)
    if result.failed_deltas:
        print(f"excluded noise levels with no surviving cells: {result.failed_deltas}",
              file=sys.stderr)
    slope = f"{result.fit.slope:.6f}" if result.fit else "n/a"
    print(f"wrote {out}/results.csv aggregate.csv fits.csv manifest.ini  slope={slope}")
    return 0


def cmd_oracle_linear(cfg):
    deltas = np.logspace(
        math.log10(cfg["delta_min"]), math.log10(cfg["delta_max"]), cfg["n_deltas"]
    )
    result = experiment.linear_oracle(cfg["mu"], cfg["n_dim"], deltas, seed=cfg["seed"])
    print(f"mu={cfg['mu']}  slope={result.fit.slope:.6f}  intercept={result.fit.intercept:.6f}")
    if cfg["out"]:
        os.makedirs(cfg["out"], exist_ok=True)
        with open(os.path.join(cfg["out"], "oracle.csv"), "w") as f:
            f.write("delta,alpha,error\n")
            for d, a, e in zip(result.deltas, result.alphas, result.errors):
                f.write(f"{float(d)!r},{float(a)!r},{float(e)!r}\n")
        with open(os.path.join(cfg["out"], "fits.csv"), "w") as f:
            f.write(experiment.fits_csv([(f"oracle-mu-{cfg['mu']}", result.fit)]))
        _write_manifest("oracle-linear", cfg, os.path.join(cfg["out"], "manifest.ini"))
    return 0


def _read_csv(path):
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def _table_deltas_errors(path):
    """Extract (delta, error, method) triples from a results-style table."""
    header, rows = _read_csv(path)
    try:
        d_col = header.index("delta")
    except ValueError as exc:
        raise ValueError(f"{path}: no 'delta' column") from exc
    if "mean_error" in header:
        e_col = header.index("mean_error")
    elif "error" in header:
        e_col = header.index("error")
    else:
        raise ValueError(f"{path}: no 'error' or 'mean_error' column")
    m_col = header.index("method") if "method" in header else None
    triples = []
    for row in rows:
        method = row[m_col] if m_col is not None else "all"
        triples.append((float(row[d_col]), float(row[e_col]), method))
    return triples


def cmd_rate_fit(cfg):
    triples = _table_deltas_errors(cfg["table"])
    methods = []
    for _, _, m in triples:
        if m not in methods:
            methods.append(m)
    fits = []
    for method in methods:
        ds = [d for d, _, m in triples if m == method]
        es = [e for _, e, m in triples if m == method]
        fit = experiment.fit_rate(ds, es)
        fits.append((method, fit))
        prefix = f"{method}: " if len(methods) > 1 else ""
        print(f"{prefix}slope = {fit.slope:.6f}")
    if cfg["out"]:
        os.makedirs(cfg["out"], exist_ok=True)
        with open(os.path.join(cfg["out"], "fits.csv"), "w") as f:
            f.write(experiment.fits_csv(fits))
        _write_manifest("rate-fit", cfg, os.path.join(cfg["out"], "manifest.ini"))
    return 0


def cmd_plot(cfg):
    header, rows = _read_csv(cfg["table"])
    required = ["delta", "mean_error", "std_error", "method"]
    if header[: len(required)] != required:
        raise ValueError(f"{cfg['table']}: expected header {','.join(required)}")
    points = [(float(r[0]), float(r[1]), float(r[2]), r[3]) for r in rows]
    svgplot.emit_plot(cfg["out"], points, cfg["reference_exponent"])
    _write_manifest("plot", cfg, str(cfg["out"]) + ".manifest")
    print(f"wrote {cfg['out']}")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors via exit code 1."""

    def error(self, message):
        raise ValueError(message)


def build_parser():
    parser = _Parser(prog="compact-tik", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file; flags override its values")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (fallback: ${THREADS_ENV})")
        for key, (_, default, help_text) in schema.items():
            p.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key.replace("-", "_"),
                default=None,
                help=f"{help_text} (default: {_serialize(default)})",
            )
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args.subcommand, args)
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get(THREADS_ENV, "1"))
        if args.subcommand == "phantom":
            return cmd_phantom(cfg)
        if args.subcommand == "sinogram":
            return cmd_sinogram(cfg)
        if args.subcommand == "tikhonov":
            return cmd_tikhonov(cfg)
        if args.subcommand == "nn-reconstruct":
            return cmd_nn_reconstruct(cfg)
        if args.subcommand == "sweep":
            return cmd_sweep(cfg, threads)
        if args.subcommand == "oracle-linear":
            return cmd_oracle_linear(cfg)
        if args.subcommand == "rate-fit":
            return cmd_rate_fit(cfg)
        if args.subcommand == "plot":
            return cmd_plot(cfg)
        raise ValueError(f"unknown subcommand {args.subcommand!r}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
