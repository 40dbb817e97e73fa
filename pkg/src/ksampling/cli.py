"""Command-line entry point.

Every subcommand that writes files also writes ``manifest.json`` to its
output directory: tool version, resolved configuration, seeds, SHA-256
digests of the inputs, the output list and the wall-clock duration.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .bench import (
    ExperimentConfig,
    SchemeContext,
    build_mask,
    gain_report,
    load_reference,
    psnr,
    reconstruct,
    results_csv,
    run_monte_carlo,
    trials_csv,
)
from .density import (
    BoundQuery,
    bound_required_m,
    k_of_density,
    optimal_density,
    restricted_density,
)
from .formats import (
    ensure_dir,
    file_digest,
    read_csa1,
    read_csm1,
    save_image,
    save_mask_pgm,
    write_csa1,
    write_csm1,
)
from .gridops import a0_apply, dwt2
from .masks import RngStream, SamplingMask
from .phantom import phantom
from .solver import SolverOptions
from .wavelets import WaveletSpec

logger = logging.getLogger("ksampling")


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; this tool reserves 2 for
    # runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dump_json(path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")


def _write_manifest(out_dir, subcommand, config, seeds, inputs, outputs, started) -> None:
    manifest = {
        "tool": "ksampling",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "seeds": seeds,
        "inputs": {os.path.abspath(p): file_digest(p) for p in inputs},
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "duration_s": round(time.perf_counter() - started, 3),
    }
    _dump_json(os.path.join(out_dir, "manifest.json"), manifest)


def _spec_from_args(args) -> WaveletSpec:
    return WaveletSpec(args.family, args.levels, args.vanishing_moments)


def _add_wavelet_args(p) -> None:
    g = p.add_argument_group("wavelet")
    g.add_argument("--family", choices=["symmlet", "shannon"], default="symmlet")
    g.add_argument("--levels", type=int, default=3, help="decomposition depth J")
    g.add_argument("--vanishing-moments", type=int, default=10)
    g.add_argument("--tau", type=float, default=0.01,
                   help="relative threshold defining Omega for Symmlet atoms")
    g.add_argument("--low-levels", type=int, default=0,
                   help="coarsest detail levels added to Omega")


def _wavelet_config(args) -> dict:
    return {
        "wavelet": _spec_from_args(args).to_dict(),
        "tau": args.tau,
        "low_levels": args.low_levels,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_info(args) -> int:
    info = {
        "version": __version__,
        "formats": {
            "CSA1": "magic 'CSA1', u8 dtype (0 real f64, 1 complex f64), u32 rows, u32 cols, row-major LE",
            "CSM1": "magic 'CSM1', u32 N, u32 count, sorted u32 linear indices (row*N + col)",
            "PGM": "binary P5, 8 or 16 bit, square, power-of-two side",
        },
        "defaults": {
            "wavelet": WaveletSpec().to_dict(),
            "tau": 0.01,
            "budget": 0.2,
            "trials": 10,
            "solver": SolverOptions().to_dict(),
        },
        "schemes": ["pi", "pistar", "uniform", "poly:p", "two_stage:poly:p",
                    "radial:uniform", "radial:random", "spiral"],
    }
    if args.json:
        print(json.dumps(info, indent=2, sort_keys=True))
    else:
        print(f"ksampling {__version__}")
        print("formats:")
        for k, v in info["formats"].items():
            print(f"  {k:5s} {v}")
        print("defaults:")
        for k, v in info["defaults"].items():
            print(f"  {k}: {v}")
        print("schemes: " + ", ".join(info["schemes"]))
    return 0


def cmd_phantom(args) -> int:
    img = phantom(args.n, args.variant)
    out = args.out
    ensure_dir(os.path.dirname(os.path.abspath(out)))
    if out.endswith(".csa"):
        write_csa1(out, img)
    else:
        save_image(out, img, maxval=65535)
    print(out)
    return 0


def cmd_density(args) -> int:
    started = time.perf_counter()
    out = ensure_dir(args.out)
    spec = _spec_from_args(args)
    ctx = SchemeContext(args.n, spec, args.tau, args.low_levels)
    norms = ctx.norms
    pi = optimal_density(norms)
    pistar = restricted_density(norms, ctx.omega)
    k_pi = k_of_density(norms, pi)
    summary = {
        "L": pi.normalizer,
        "Lstar": pistar.normalizer,
        "K_pi": k_pi,
        "J": spec.levels,
        "N": args.n,
        "wavelet": spec.label,
        "omega_size": len(ctx.omega),
        "omega_provenance": ctx.omega.provenance,
    }
    if args.scan_levels:
        scan = {}
        for j in args.scan_levels:
            s_j = WaveletSpec(spec.family, j, spec.vanishing_moments)
            scan[str(j)] = optimal_density(SchemeContext(args.n, s_j).norms).normalizer
        summary["L_by_J"] = scan
    if args.sparsity:
        res = bound_required_m(BoundQuery(args.sparsity, args.n * args.n, k_pi**2,
                                          epsilon=args.epsilon))
        # the constants C, D are unknown, so this is a diagnostic only
        summary["bound_diagnostic"] = {
            "s": args.sparsity,
            "m_required": res.m,
            "vacuous": res.vacuous,
            "log4_n": res.log4_n,
        }
    outputs = []
    for name, arr in (("infnorm.csa", norms), ("pi.csa", pi.mass), ("pistar.csa", pistar.mass)):
        path = os.path.join(out, name)
        write_csa1(path, arr)
        outputs.append(path)
    path = os.path.join(out, "omega.csm")
    write_csm1(path, args.n, ctx.omega.indices)
    outputs.append(path)
    path = os.path.join(out, "omega.pgm")
    save_mask_pgm(path, ctx.omega.to_grid())
    outputs.append(path)
    path = os.path.join(out, "density.json")
    _dump_json(path, summary)
    outputs.append(path)
    config = dict(_wavelet_config(args), n=args.n, scan_levels=args.scan_levels,
                  sparsity=args.sparsity, epsilon=args.epsilon)
    _write_manifest(out, "density", config, [], [], outputs, started)
    print(json.dumps({k: summary[k] for k in ("L", "Lstar", "K_pi", "J")}))
    return 0


def cmd_mask(args) -> int:
    started = time.perf_counter()
    out = ensure_dir(args.out)
    spec = _spec_from_args(args)
    ctx = SchemeContext(args.n, spec, args.tau, args.low_levels, args.center_fraction)
    mask = build_mask(args.scheme, ctx, args.budget, RngStream(args.seed))
    sidecar = mask.sidecar()
    sidecar.update(_wavelet_config(args), n=args.n, fraction=mask.fraction)
    outputs = [os.path.join(out, f) for f in ("mask.csm", "mask.json", "mask.pgm")]
    write_csm1(outputs[0], args.n, mask.indices)
    _dump_json(outputs[1], sidecar)
    save_mask_pgm(outputs[2], mask.to_grid())
    config = dict(_wavelet_config(args), scheme=args.scheme, budget=args.budget, n=args.n,
                  seed=args.seed, center_fraction=args.center_fraction)
    _write_manifest(out, "mask", config, [args.seed], [], outputs, started)
    print(f"{args.scheme}: {mask.distinct} samples ({mask.fraction:.4%})")
    return 0


def _read_sidecar(mask_path, explicit):
    path = explicit or os.path.splitext(mask_path)[0] + ".json"
    if os.path.exists(path):
        with open(path) as f:
            return json.load(f), path
    return None, None


def cmd_reconstruct(args) -> int:
    started = time.perf_counter()
    out = ensure_dir(args.out)
    n, indices = read_csm1(args.mask)
    sidecar, sidecar_path = _read_sidecar(args.mask, args.sidecar)
    inputs = [args.mask] + ([sidecar_path] if sidecar_path else [])
    if sidecar:
        spec = WaveletSpec.from_dict(sidecar["wavelet"])
        tau, low = sidecar["tau"], sidecar["low_levels"]
        omega_size = int(sidecar.get("omega_size", 0))
    else:
        spec, tau, low, omega_size = _spec_from_args(args), args.tau, args.low_levels, 0
    ctx = SchemeContext(n, spec, tau, low)
    if omega_size and omega_size != len(ctx.omega):
        raise ValueError(f"sidecar Omega size {omega_size} does not match "
                         f"the recomputed Omega ({len(ctx.omega)})")

    reference = None
    if args.kspace:
        kspace = read_csa1(args.kspace)
        inputs.append(args.kspace)
    else:
        reference = load_reference(args.reference, n)
        if not args.reference.startswith("phantom"):
            inputs.append(args.reference)
        kspace = a0_apply(dwt2(reference, spec), spec)
    if kspace.shape != (n, n):
        raise ValueError(f"k-space is {kspace.shape}, mask expects {(n, n)}")

    opts = SolverOptions()
    if args.options:
        with open(args.options) as f:
            opts = SolverOptions(**json.load(f))
        inputs.append(args.options)
    mask = SamplingMask(side=n, indices=indices, scheme={}, omega_size=omega_size)
    image, report = reconstruct(mask, kspace.ravel()[indices], ctx, opts)
    image = np.real(image)

    result = {"solver": report.to_dict(), "two_stage": bool(omega_size)}
    if reference is not None:
        result["psnr_db"] = psnr(reference, image)
    outputs = [os.path.join(out, f) for f in ("recon.csa", "recon.pgm", "report.json")]
    write_csa1(outputs[0], image)
    save_image(outputs[1], image)
    _dump_json(outputs[2], result)
    config = {
        "mask": os.path.abspath(args.mask),
        "kspace": args.kspace and os.path.abspath(args.kspace),
        "reference": args.reference,
        "wavelet": spec.to_dict(),
        "tau": tau,
        "low_levels": low,
        "solver": opts.to_dict(),
    }
    _write_manifest(out, "reconstruct", config, [], inputs, outputs, started)
    msg = f"{report.iterations} iterations, converged={report.converged}"
    if "psnr_db" in result:
        msg += f", PSNR {result['psnr_db']:.2f} dB"
    print(msg)
    return 0


def cmd_bench(args) -> int:
    started = time.perf_counter()
    out = ensure_dir(args.out)
    with open(args.config) as f:
        raw = json.load(f)
    cfg = ExperimentConfig.from_dict(raw)
    if args.workers:
        cfg.workers = args.workers
    if args.trials:
        cfg.trials = args.trials

    def progress(o):
        if "error" in o:
            logger.warning("%s trial %d: %s", o["label"], o["trial"], o["error"])
        else:
            logger.info("%s trial %d: %.2f dB (%d iterations)", o["label"], o["trial"],
                        o["psnr"], o["iterations"])

    rows, outcomes = run_monte_carlo(cfg, progress=progress, return_trials=True)
    outputs = [os.path.join(out, "results.csv"), os.path.join(out, "trials.csv")]
    with open(outputs[0], "w") as f:
        f.write(results_csv(rows, cfg))
    with open(outputs[1], "w") as f:
        f.write(trials_csv(outcomes, cfg))

    by_label = {r.label: r for r in rows}
    pairs = []
    for r in rows:
        partner = "pi" if r.label == "pistar" else r.label.replace("two_stage:", "", 1)
        if partner != r.label and partner in by_label:
            pairs.append((by_label[partner], r))
    if pairs:
        gains = gain_report([p[0] for p in pairs], [p[1] for p in pairs])
        path = os.path.join(out, "gains.csv")
        with open(path, "w") as f:
            f.write("two_stage,single_stage,gain_db,delta_std_db\n")
            for g in gains:
                f.write(f"{g.label},{g.single},{g.gain:.4f},{g.delta_std:.4f}\n")
        outputs.append(path)

    config = cfg.to_dict()
    seeds = [[cfg.base_seed, t] for t in range(cfg.trials)]
    _write_manifest(out, "bench", config, seeds, [args.config], outputs, started)
    width = max(len(r.label) for r in rows)
    for r in rows:
        std = f"{r.std:6.2f}" if r.trials > 1 else "      "
        flag = f"  ({len(r.errors)} failed)" if r.errors else ""
        print(f"{r.label:<{width}}  {r.mean:7.2f}  {std}{flag}")
    failed = sum(len(r.errors) for r in rows)
    return 2 if failed and all(not r.psnrs for r in rows) else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ksampling", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ksampling {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("info", help="version, file formats and defaults")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("phantom", help="render the bundled reference image")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--variant", choices=["ellipses", "blocks"], default="ellipses")
    p.add_argument("--out", required=True, help=".pgm (16-bit) or .csa path")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("density", help="infinity-norm map, optimal densities and L")
    p.add_argument("--n", type=int, default=256)
    _add_wavelet_args(p)
    p.add_argument("--scan-levels", type=lambda s: [int(v) for v in s.split(",")], default=None,
                   help="comma-separated J values to report L for")
    p.add_argument("--sparsity", type=int, default=0,
                   help="also report the sample-count bound for this sparsity")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("mask", help="draw a sampling mask")
    p.add_argument("--scheme", required=True,
                   help="pi | pistar | uniform | poly:p | two_stage:poly:p | "
                        "radial:{uniform,random} | spiral")
    p.add_argument("--budget", type=float, default=0.2)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center-fraction", type=float, default=None,
                   help="spiral disc area as a fraction of N^2 (default: |Omega|/N^2)")
    _add_wavelet_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("reconstruct", help="l1 reconstruction from masked k-space")
    p.add_argument("--mask", required=True, help="CSM1 file")
    p.add_argument("--sidecar", default=None, help="mask JSON (default: next to the mask)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--kspace", help="CSA1 centred N x N k-space")
    src.add_argument("--reference", help="PGM path or phantom:<variant>; k-space is simulated")
    p.add_argument("--options", help="solver options JSON")
    _add_wavelet_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("bench", help="Monte-Carlo PSNR study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=0, help="override the config's worker count")
    p.add_argument("--trials", type=int, default=0, help="override the config's trial count")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError, LookupError) as exc:
        print(f"ksampling {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
