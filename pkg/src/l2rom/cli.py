"""Command-line front end.

Subcommands: generate (build a full-order model file), sample (evaluate it
into a weighted sample set), fit (optimize a structured reduced model),
certify (evaluate interpolatory optimality residuals), report (emit
plot-ready columnar text).

Exit codes: 0 success / certificate pass, 1 certificate fail, 2 usage or
validation error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io, models
from .certify import (
    Interval,
    h2_ct_residuals,
    h2_dt_residuals,
    h2l2_residuals,
    ls_residuals,
    modified_ls_tf_eval,
    modified_output_eval,
    stationary_residuals,
)
from .core import kron_rom, lti_rom, stationary_rom
from .optimize import FitOptions, fit, greedy_rb_init, irka_init
from .spectral import kron_pole_residue, pole_residue_affine_singular, pole_residue_lti

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3

FAMILY_FLAGS = {
    "h2-ct": "H2_CT",
    "h2-dt": "H2_DT",
    "h2xl2": "H2xL2",
    "discrete-ls": "DISCRETE_LS",
    "stationary": "STATIONARY",
}


class UsageError(Exception):
    pass


def rom_structure(rom):
    """Classify a structured rom by its scalar families."""
    if rom.kron is not None:
        return "kron"
    fams = tuple(fam.terms for fam, _ in rom.A_terms)
    if fams == (((1.0, (1,)),), ((-1.0, (0,)),)):
        return "lti"
    if fams == (((1.0, (0,)),), ((1.0, (1,)),)):
        return "stationary"
    return "unknown"


def rom_pole_residue(rom):
    structure = rom_structure(rom)
    b = rom.B_terms[0][1]
    c = rom.C_terms[0][1]
    if structure == "lti":
        return pole_residue_lti(rom.A_terms[0][1], rom.A_terms[1][1], b, c)
    if structure == "stationary":
        return pole_residue_affine_singular(rom.A_terms[0][1], rom.A_terms[1][1], b, c)
    if structure == "kron":
        ks = rom.kron
        return kron_pole_residue(ks.E, ks.A, ks.E_xi, ks.A_xi, b, c)
    raise UsageError("rom file has an unrecognized operator structure")


def _load(path, kind):
    try:
        return io.read_payload(path, expect_kind=kind)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid {kind} file {path}: {exc}") from exc


def cmd_generate(args):
    params = {}
    if args.model == "penzl":
        pass
    elif args.model == "poisson":
        params["cells_per_side"] = args.cells
    elif args.model == "random-lti":
        params = {
            "n": args.n,
            "n_i": args.inputs,
            "n_o": args.outputs,
            "seed": args.seed,
            "time_domain": "dt" if args.dt else "ct",
        }
    elif args.model == "kron-parametric":
        params = {
            "r_s_terms": args.s_terms,
            "r_xi_terms": args.xi_terms,
            "n_i": args.inputs,
            "n_o": args.outputs,
            "seed": args.seed,
        }
    payload = io.model_to_payload(args.model, params)
    fom = io.model_from_payload(payload)
    n = getattr(getattr(fom, "A", None), "shape", (None,))[0]
    if n is None and hasattr(fom, "A1"):
        n = fom.A1.shape[0]
    payload = io.model_to_payload(args.model, params, meta={} if n is None else {"n": int(n)})
    io.write_payload(args.out, payload)
    print(f"wrote {args.model} model to {args.out}" + (f" (n = {n})" if n else ""))
    return EXIT_OK


def cmd_sample(args):
    payload = _load(args.model, "model")
    fom = io.model_from_payload(payload)
    parts = args.scheme.split()
    try:
        if parts[0] == "logspace":
            lo, hi, num = float(parts[1]), float(parts[2]), int(parts[3])
            freqs = np.logspace(np.log10(lo), np.log10(hi), num)
            data = models.sample_frequency_response(fom, freqs)
        elif parts[0] == "gauss":
            data = models.sample_stationary(fom, int(parts[1]))
        elif parts[0] == "circle":
            data = models.sample_unit_circle(fom, int(parts[1]))
        elif parts[0] == "h2l2":
            data = models.sample_h2l2(fom, n_s=int(parts[1]), n_xi=int(parts[2]))
        else:
            raise UsageError(f"unknown sampling scheme {parts[0]!r}")
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad sampling scheme {args.scheme!r}: {exc}") from exc
    from .core import check_conjugation_closure

    closed, _ = check_conjugation_closure(data)
    io.write_payload(args.out, io.samples_to_payload(data))
    print(f"wrote {len(data)} samples to {args.out} (conjugation-closed: {closed})")
    return EXIT_OK


def _random_rom(structure, args, rng):
    r = args.order
    if structure == "lti" or structure == "lti-dt":
        a = rng.standard_normal((r, r))
        a = -(a @ a.T) / 2 - 0.5 * np.eye(r)
        if structure == "lti-dt":
            a = 0.5 * a / max(np.max(np.abs(np.linalg.eigvals(a))), 1.0)
        return lti_rom(np.eye(r), a, rng.standard_normal((r, args.inputs)), rng.standard_normal((args.outputs, r)))
    if structure == "stationary":
        a2 = rng.standard_normal((r, r))
        a2 = a2 @ a2.T / 2 + 0.5 * np.eye(r)
        return stationary_rom(
            np.eye(r), a2, rng.standard_normal((r, args.inputs)), rng.standard_normal((args.outputs, r))
        )
    rs, rx = args.order_s, args.order_xi
    a = rng.standard_normal((rs, rs))
    a = -(a @ a.T) / 2 - 0.5 * np.eye(rs)
    ax = rng.standard_normal((rx, rx))
    ax = ax @ ax.T / 2 + 1.5 * np.eye(rx)
    return kron_rom(
        np.eye(rs), a, np.eye(rx), ax,
        rng.standard_normal((rs * rx, args.inputs)), rng.standard_normal((args.outputs, rs * rx)),
    )


def cmd_fit(args):
    if args.structure != "kron" and args.order <= 0:
        raise UsageError("reduced order must be positive")
    if args.structure == "kron" and (args.order_s <= 0 or args.order_xi <= 0):
        raise UsageError("reduced orders must be positive")
    data = io.samples_from_payload(_load(args.samples, "samples"))

    rng = np.random.default_rng(args.seed)
    inits = []
    if args.init == "file":
        if not args.init_file:
            raise UsageError("--init file requires --init-file")
        inits = [io.rom_from_payload(_load(args.init_file, "rom"))]
    elif args.init == "random":
        inits = [_random_rom(args.structure, args, rng) for _ in range(max(args.restarts, 1))]
    else:
        if not args.model:
            raise UsageError(f"--init {args.init} requires --model")
        fom = io.model_from_payload(_load(args.model, "model"))
        if args.init == "irka":
            if args.structure not in ("lti", "lti-dt"):
                raise UsageError("irka initialization applies to lti structures")
            td = "dt" if args.structure == "lti-dt" else "ct"
            inits = [irka_init(fom.E, fom.A, fom.B, fom.C, args.order, time_domain=td, seed=args.seed)]
        elif args.init == "rb":
            if args.structure != "stationary":
                raise UsageError("rb initialization applies to the stationary structure")
            a, b = fom.interval
            inits = [greedy_rb_init(fom, args.order, np.logspace(np.log10(a), np.log10(b), 20))]

    opts = FitOptions(max_iters=args.max_iters, grad_tol=args.tol)
    best = None
    for init in inits:
        trace = fit(init, data, opts)
        if best is None or trace.objectives[-1] < best.objectives[-1]:
            best = trace
    rom = best.rom
    io.write_payload(args.out, io.rom_to_payload(rom))
    trace_path = args.trace or args.out + ".trace"
    io.write_payload(trace_path, io.trace_to_payload(best))
    print(f"final objective {best.objectives[-1]:.6e}, gradient norm {best.grad_norms[-1]:.3e}, "
          f"converged: {best.converged}")
    try:
        pr = rom_pole_residue(rom)
        if hasattr(pr, "poles"):
            print("poles:", np.array2string(np.sort_complex(pr.poles), precision=6))
        else:
            print("s-poles:", np.array2string(np.sort_complex(pr.s_poles), precision=6))
            print("xi-poles:", np.array2string(np.sort_complex(pr.xi_poles), precision=6))
    except Exception as exc:  # pole extraction is informational only
        print(f"pole extraction failed: {exc}")
    print(f"wrote rom to {args.out} and trace to {trace_path}")
    return EXIT_OK


_FAMILY_STRUCTURE = {
    "H2_CT": "lti",
    "H2_DT": "lti",
    "DISCRETE_LS": "lti",
    "H2xL2": "kron",
    "STATIONARY": "stationary",
}


def cmd_certify(args):
    family = FAMILY_FLAGS[args.family]
    rom = io.rom_from_payload(_load(args.rom, "rom"))
    structure = rom_structure(rom)
    if structure != _FAMILY_STRUCTURE[family]:
        raise UsageError(
            f"certificate family {args.family} requires a {_FAMILY_STRUCTURE[family]} rom, "
            f"found {structure}"
        )
    pr = rom_pole_residue(rom)
    tol = args.tol if args.tol is not None else {"H2_CT": 1e-6, "H2_DT": 1e-4, "H2xL2": 1e-4,
                                                "DISCRETE_LS": 1e-6, "STATIONARY": 1e-6}[family]
    if family == "DISCRETE_LS":
        if not args.samples:
            raise UsageError("discrete-ls certification requires --samples")
        data = io.samples_from_payload(_load(args.samples, "samples"))
        cert = ls_residuals(data, pr, tolerance=tol)
    else:
        if not args.model:
            raise UsageError(f"{args.family} certification requires --model")
        fom = io.model_from_payload(_load(args.model, "model"))
        if family == "H2_CT":
            cert = h2_ct_residuals(fom.evaluator(), pr, tolerance=tol)
        elif family == "H2_DT":
            cert = h2_dt_residuals(fom.evaluator(), pr, tolerance=tol)
        elif family == "H2xL2":
            cert = h2l2_residuals(fom.evaluator(), pr, tolerance=tol)
        else:
            fom_pr = pole_residue_affine_singular(fom.A1, fom.A2, fom.B, fom.C)
            cert = stationary_residuals(fom_pr, pr, Interval(*fom.interval), tolerance=tol)
    if args.out:
        io.write_payload(args.out, io.certificate_to_payload(cert))
    print(f"{family}: max residual {cert.max_residual:.3e} "
          f"(tolerance {cert.tolerance:.1e}) -> {'PASS' if cert.passed else 'FAIL'}")
    return EXIT_OK if cert.passed else EXIT_CERT_FAIL


def cmd_report(args):
    rom = io.rom_from_payload(_load(args.rom, "rom"))
    pr = rom_pole_residue(rom)
    family = FAMILY_FLAGS[args.family]
    lines = []
    if family == "DISCRETE_LS":
        if not args.samples:
            raise UsageError("discrete-ls report requires --samples")
        data = io.samples_from_payload(_load(args.samples, "samples"))
        mirrors = np.sort(-np.conj(pr.poles).real)
        lines.append("# columns: s  G(s)  Ghat(s)  G(s)-Ghat(s)")
        for m in mirrors:
            lines.append(f"# mirrored-pole {m:.17g}")
        grid = np.logspace(np.log10(max(mirrors.min() / 10, 1e-3)), np.log10(mirrors.max() * 10), args.points)
        for s in grid:
            g = modified_ls_tf_eval(data, None, s)[0, 0]
            gh = modified_ls_tf_eval(data, pr, s)[0, 0]
            lines.append(f"{s:.17g} {g.real:.17g} {gh.real:.17g} {(g - gh).real:.17g}")
    elif family == "STATIONARY":
        if not args.model:
            raise UsageError("stationary report requires --model")
        fom = io.model_from_payload(_load(args.model, "model"))
        fom_pr = pole_residue_affine_singular(fom.A1, fom.A2, fom.B, fom.C)
        interval = Interval(*fom.interval)
        poles = np.sort(pr.poles.real)
        lines.append("# columns: p  Y(p)  Yhat(p)  Y(p)-Yhat(p)")
        for lam in poles:
            lines.append(f"# rom-pole {lam:.17g}")
        lo = poles.min() * 1.5
        hi = min(poles.max() * 0.5, -1e-3 * (interval.b - interval.a))
        grid = np.linspace(lo, hi, args.points)
        for p in grid:
            y = modified_output_eval(fom_pr, pr, interval, p, which="Y")[0, 0]
            yh = modified_output_eval(fom_pr, pr, interval, p, which="Yhat")[0, 0]
            lines.append(f"{p:.17g} {y:.17g} {yh:.17g} {y - yh:.17g}")
    else:
        raise UsageError("reports exist for the discrete-ls and stationary families")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
        print(f"wrote report to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="l2rom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a full-order model file")
    gen.add_argument("model", choices=io.MODEL_NAMES)
    gen.add_argument("--out", "-o", required=True)
    gen.add_argument("--n", type=int, default=30)
    gen.add_argument("--inputs", type=int, default=1)
    gen.add_argument("--outputs", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--dt", action="store_true", help="discrete-time random model")
    gen.add_argument("--cells", type=int, default=32, help="mesh cells per side (poisson)")
    gen.add_argument("--s-terms", type=int, default=6)
    gen.add_argument("--xi-terms", type=int, default=5)
    gen.set_defaults(func=cmd_generate)

    smp = sub.add_parser("sample", help="evaluate a model into a sample set")
    smp.add_argument("model")
    smp.add_argument("--scheme", required=True,
                     help='"logspace LO HI N" | "gauss N" | "circle N" | "h2l2 NS NXI"')
    smp.add_argument("--out", "-o", required=True)
    smp.set_defaults(func=cmd_sample)

    fitp = sub.add_parser("fit", help="fit a structured reduced model to samples")
    fitp.add_argument("samples")
    fitp.add_argument("--structure", required=True, choices=("lti", "lti-dt", "kron", "stationary"))
    fitp.add_argument("--init", default="random", choices=("irka", "rb", "random", "file"))
    fitp.add_argument("--model", help="model file (for irka/rb initialization)")
    fitp.add_argument("--init-file", help="rom file (for file initialization)")
    fitp.add_argument("--order", "-r", type=int, default=2)
    fitp.add_argument("--order-s", type=int, default=2)
    fitp.add_argument("--order-xi", type=int, default=2)
    fitp.add_argument("--inputs", type=int, default=1)
    fitp.add_argument("--outputs", type=int, default=1)
    fitp.add_argument("--restarts", type=int, default=1)
    fitp.add_argument("--max-iters", type=int, default=500)
    fitp.add_argument("--tol", type=float, default=1e-8, help="relative gradient tolerance")
    fitp.add_argument("--seed", type=int, default=0)
    fitp.add_argument("--out", "-o", required=True)
    fitp.add_argument("--trace", help="trace output path (default: OUT.trace)")
    fitp.set_defaults(func=cmd_fit)

    cert = sub.add_parser("certify", help="evaluate optimality-condition residuals")
    cert.add_argument("rom")
    cert.add_argument("--family", required=True, choices=sorted(FAMILY_FLAGS))
    cert.add_argument("--model")
    cert.add_argument("--samples")
    cert.add_argument("--tol", type=float)
    cert.add_argument("--out", "-o")
    cert.set_defaults(func=cmd_certify)

    rep = sub.add_parser("report", help="emit plot-ready columnar text")
    rep.add_argument("rom")
    rep.add_argument("--family", required=True, choices=sorted(FAMILY_FLAGS))
    rep.add_argument("--model")
    rep.add_argument("--samples")
    rep.add_argument("--points", type=int, default=200)
    rep.add_argument("--out", "-o")
    rep.set_defaults(func=cmd_report)

    sub_map = {"generate": gen, "sample": smp, "fit": fitp, "certify": cert, "report": rep}
    return parser, sub_map


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    # --config supplies defaults for any later flag
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            cfg_path = argv[idx + 1]
        except IndexError:
            print("--config requires a path", file=sys.stderr)
            return EXIT_USAGE
        del argv[idx : idx + 2]
        try:
            with open(cfg_path) as handle:
                config = json.load(handle)
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        config = {}

    parser, sub_map = build_parser()
    args = parser.parse_args(argv)
    subparser = sub_map[args.command]
    for key, value in config.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr):
            # command-line flags win; config only fills parser defaults
            if subparser.get_default(attr) == getattr(args, attr):
                setattr(args, attr, value)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
