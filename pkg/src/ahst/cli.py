"""ahst command-line interface.

Exit codes: 0 success, 2 config or state-spec error, 3 geometry mismatch, 4 degenerate data.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import imaging, io
from .config import load_config
from .errors import ConfigError, DegenerateDataError, FitError, FormatError, GeometryError
from .experiments import kernel_table_for, seed_for, table1
from .imaging import apply_noise, intensity_image, read_image, reference_scale, write_image
from .modes import orthogonality_matrix
from .recon import fit_waist, reconstruct
from .wigner import export_csv as export_wigner_csv
from .wigner import wigner as wigner_grid
from .wigner import write_ppm

EXIT_OK, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_DEGENERATE = 0, 2, 3, 4


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_base(args):
    return Path(args.config).parent if args.config else Path.cwd()


def cmd_simulate(cfg, args):
    if args.state:
        cfg.state = str(Path(args.state).resolve())
    rho = cfg.target_state(_config_base(args))
    if rho is None:
        raise ConfigError("simulate needs a state: set \"state\" in the config or pass --state")
    geometry = cfg.geometry()
    clean = intensity_image(rho, geometry, max_dim=cfg.l_max + 1)
    capture = clean.total_counts * geometry.pitch**2 / reference_scale(geometry)
    image = apply_noise(clean, cfg.noise.model(), seed_for(cfg.seed, 0))
    image = imaging.IntensityImage(image.geometry, image.pixels, cfg.gouy_rotate_90)
    out = _out_dir(cfg)
    path = out / f"{args.name}.pgm"
    write_image(image, path)
    if args.csv:
        imaging.export_csv(image, out / f"{args.name}.csv")
    print(f"wrote {path}")
    print(f"total_counts {image.total_counts:.10g}")
    print(f"window_capture {capture:.10f}")
    return EXIT_OK


def cmd_reconstruct(cfg, args):
    image = read_image(args.image)
    target = cfg.target_state(_config_base(args))
    # the pixel grid is fixed by the configured waist; reconstruction may assume a miscalibrated one
    geometry = cfg.geometry().with_sigma(cfg.recon_sigma())
    if image.geometry.n_pixels != geometry.n_pixels or not np.isclose(image.geometry.pitch, geometry.pitch, rtol=1e-9):
        raise GeometryError(
            f"image grid (N={image.geometry.n_pixels}, pitch={image.geometry.pitch:.6g} mm) does not match "
            f"config grid (N={geometry.n_pixels}, pitch={geometry.pitch:.6g} mm)"
        )
    table = kernel_table_for(cfg, geometry)
    dark = cfg.noise.dark_level if cfg.subtract_dark else 0.0
    rec = reconstruct(image, table, cfg.dim, method=cfg.method, dark_level=dark)
    out = _out_dir(cfg)
    io.write_matrix(rec.raw, out / "rho_raw.json")
    io.write_matrix(rec.physical, out / "rho_physical.json")
    io.write_matrix_csv(rec.raw, out / "rho_raw.csv")
    io.write_matrix_csv(rec.physical, out / "rho_physical.csv")
    report = rec.report(target)
    io.write_json(report, out / "report.json")
    if "fidelity_vs_target" in report:
        print(f"fidelity {report['fidelity_vs_target']:.6f}")
    print(f"S_final {rec.S_final:.6g}")
    return EXIT_OK


def cmd_table1(cfg, args):
    rows = table1(cfg)
    out = _out_dir(cfg)
    path = out / "table1.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "state", "fidelity_mean", "fidelity_std", "repetitions"])
        for row in rows:
            writer.writerow([row.group, row.state, f"{row.mean:.6f}", f"{row.std:.6f}", len(row.fidelities)])
    for row in rows:
        print(f"{row.group:<14}{row.state:<8}{row.mean:.3f} +- {row.std:.3f}")
    return EXIT_OK


def cmd_wigner(cfg, args):
    rho = io.read_matrix(args.matrix)
    if not rho.physical:
        raise ConfigError(f"{args.matrix} is not a physical density matrix")
    grid = wigner_grid(rho, cfg.wigner_extent, cfg.wigner_points)
    out = _out_dir(cfg)
    export_wigner_csv(grid, out / f"{args.name}.csv")
    write_ppm(grid, out / f"{args.name}.ppm")
    print(f"W range [{grid.values.min():.6g}, {grid.values.max():.6g}], integral {grid.integral():.6f}")
    return EXIT_OK


def cmd_orthocheck(cfg, args):
    table = kernel_table_for(cfg, cfg.geometry())
    dev = np.abs(orthogonality_matrix(table) - np.eye(table.dim**2))
    d = table.dim
    per_pair = dev.max(axis=1).reshape(d, d)
    out = _out_dir(cfg)
    with open(out / "orthocheck.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["l1", "l2", "max_abs_deviation"])
        for l1 in range(d):
            for l2 in range(d):
                writer.writerow([l1, l2, f"{per_pair[l1, l2]:.6e}"])
    summary = {"max_abs_deviation": float(dev.max()), "r_cut": table.r_cut,
               "n_pixels": table.geometry.n_pixels, "l_max": table.l_max}
    io.write_json(summary, out / "orthocheck.json")
    print(f"max |deviation| {dev.max():.3e}")
    return EXIT_OK


def cmd_calibrate(cfg, args):
    image = read_image(args.image)
    fit = fit_waist(image)
    out = _out_dir(cfg)
    io.write_json({"sigma_mm": fit.sigma, "sigma_err_mm": fit.sigma_err, "x0_mm": fit.x0,
                   "y0_mm": fit.y0, "r_squared": fit.r_squared}, out / "calibration.json")
    print(f"sigma {fit.sigma:.6f} +- {fit.sigma_err:.6f} mm")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "table1": cmd_table1,
    "wigner": cmd_wigner,
    "orthocheck": cmd_orthocheck,
    "calibrate": cmd_calibrate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit run seed")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="ahst", description="Auxiliary Hilbert space tomography of OAM states")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="synthesize an intensity image")
    p.add_argument("--state", help="state spec file (overrides config)")
    p.add_argument("--name", default="image")
    p.add_argument("--csv", action="store_true", help="also export pixels as CSV")
    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct a density matrix from an image")
    p.add_argument("image")
    sub.add_parser("table1", parents=[common], help="fidelity table over the 18 benchmark states")
    p = sub.add_parser("wigner", parents=[common], help="Wigner function of a stored density matrix")
    p.add_argument("matrix")
    p.add_argument("--name", default="wigner")
    sub.add_parser("orthocheck", parents=[common], help="kernel orthogonality report")
    p = sub.add_parser("calibrate", parents=[common], help="fit the beam waist of a Gaussian image")
    p.add_argument("image")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, FormatError) as exc:
        print(f"ahst: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"ahst: geometry mismatch: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (DegenerateDataError, FitError) as exc:
        print(f"ahst: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
