"""Command-line entry point: ``noflip <subcommand> ...``.

Exit codes: 0 success, 1 internal consistency failure (a closed form
disagrees with its explicit construction), 2 invalid arguments or config,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .bloch import DegenerateTripleError, QubitTriple, canonicalize_triple, coplanarity_det, is_great_circle
from .constructions import candidate_witness, nosignalling_feasibility
from .linalg import DEFAULT_TOL, ket
from .machine import FlipScenario, MachineModel
from .report import FIELDS, row_to_json, rows_to_csv, verify_scenario
from .sweep import ConfigError, RunManifest, SweepConfig, config_hash, make_triple, parse_angle, render, run_sweep, utc_now

EXIT_OK, EXIT_INCONSISTENT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SIGNALLING_EXTRAS = (
    "det_closed_form",
    "det_bloch",
    "deviation_explicit",
    "deviation_frobenius",
    "signalling_initial_max_err",
    "signalling_final_max_err",
    "residual_entry01",
    "residual_entry02",
    "residual_entry12",
    "residual_entry21",
)
ENTANGLEMENT_EXTRAS = (
    "lambda_i_explicit",
    "lambda_f_explicit",
    "entanglement_initial_max_err",
    "entanglement_final_max_err",
    "gain_closed_form",
    "appendix_X_re",
    "appendix_X_im",
    "appendix_Y_re",
    "appendix_Y_im",
    "appendix_Z",
    "appendix_t1",
    "appendix_t2",
    "appendix_t3",
    "appendix_t4",
    "appendix_t5",
    "appendix_t6",
    "appendix_lhs_total",
    "appendix_squared_difference",
)
PRODUCT_EXTRAS = ("n_closed_form", "product_entropy_initial", "product_entropy_final", "product_forms_max_err")


class UsageError(Exception):
    pass


def _triple_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("triple (b, d default to sqrt(1 - a^2), sqrt(1 - c^2))")
    for name in "abcd":
        g.add_argument(f"--{name}", type=float, default=None)
    g.add_argument("--theta", default="pi/2", help="radians; accepts expressions such as pi/2")


def _machine_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("machine")
    g.add_argument("--machine", default="trivial", help="trivial | identity-gram | witness | random | file:PATH")
    g.add_argument("--mu", default=None, help="override the machine phase mu (radians)")
    g.add_argument("--nu", default=None, help="override the machine phase nu (radians)")
    g.add_argument("--seed", type=int, default=0)


def _output_args(p: argparse.ArgumentParser, default_format: str = "json") -> None:
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="great-circle / feasibility tolerance")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--out", default=None, help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noflip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify-signalling", "marginal of the remote party before/after flipping"),
        ("verify-entanglement", "largest-eigenvalue and entropy comparison, five-qubit set-up"),
        ("verify-product", "product-state set-up and its normalization"),
    ):
        p = sub.add_parser(name, help=help_)
        _triple_args(p)
        _machine_args(p)
        _output_args(p)
    p = sub.add_parser("feasibility", help="does any machine leave the remote marginal unchanged?")
    _triple_args(p)
    _output_args(p)
    p = sub.add_parser("check-great-circle", help="coplanarity test for three qubit states")
    for i in range(3):
        p.add_argument(f"--s{i}", nargs=4, type=float, required=True, metavar=("RE0", "IM0", "RE1", "IM1"))
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--norm-tol", type=float, default=1e-6, help="accepted deviation of |s|^2 from 1")
    p.add_argument("--out", default=None)
    p = sub.add_parser("sweep", help="run a seeded sweep described by a JSON config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="override output.path")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="override output.format")
    p.add_argument("--workers", type=int, default=1)
    return parser


def _triple_from(args):
    try:
        return make_triple(args.a, args.b, args.c, args.d, args.theta)
    except ValueError as exc:
        raise UsageError(f"invalid triple: {exc}") from exc


def _machine_from(args) -> MachineModel:
    spec = args.machine
    try:
        if spec == "trivial":
            m = MachineModel.trivial()
        elif spec == "identity-gram":
            m = MachineModel.identity_gram()
        elif spec == "witness":
            m = candidate_witness()
        elif spec == "random":
            m = MachineModel.random(np.random.default_rng(args.seed))
        elif spec.startswith("file:"):
            try:
                with open(spec[5:], encoding="utf-8") as fh:
                    m = MachineModel.from_dict(json.load(fh))
            except OSError as exc:
                raise UsageError(f"cannot read machine file: {exc}") from exc
        else:
            raise UsageError(f"unknown machine {spec!r}")
        if args.mu is not None or args.nu is not None:
            mu = parse_angle(args.mu) if args.mu is not None else m.mu
            nu = parse_angle(args.nu) if args.nu is not None else m.nu
            m = MachineModel(mu, nu, m.gram)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid machine: {exc}") from exc
    return m


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _verify(args, extras) -> int:
    triple = _triple_from(args)
    machine = _machine_from(args)
    report = verify_scenario(FlipScenario(triple, machine), args.tol)
    row = report.row()
    row.update({k: report.details.get(k, math.nan) for k in extras})
    row["checks_passed"] = report.consistent
    fields = list(FIELDS) + list(extras) + ["checks_passed"]
    if args.format == "csv":
        text = rows_to_csv([row], fields)
    else:
        text = row_to_json(row, fields) + "\n"
    _emit(text, args.out)
    for name in report.failed_checks:
        print(f"check failed: {name}", file=sys.stderr)
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def cmd_feasibility(args) -> int:
    triple = _triple_from(args)
    verdict = nosignalling_feasibility(triple, args.tol)
    payload = {"triple": dict(zip("abcd", triple.as_tuple()[:4]), theta=triple.theta), **verdict.to_dict()}
    if args.format == "csv":
        row = dict(zip(("triple_a", "triple_b", "triple_c", "triple_d", "theta"), triple.as_tuple()))
        row["feasible"] = verdict.feasible
        row.update({f"residual_{k}": v for k, v in verdict.residuals.items()})
        text = rows_to_csv([row], list(row))
    else:
        text = json.dumps(payload) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_check_great_circle(args) -> int:
    states = []
    for i in range(3):
        re0, im0, re1, im1 = getattr(args, f"s{i}")
        v = np.array([complex(re0, im0), complex(re1, im1)])
        n2 = float(np.vdot(v, v).real)
        if abs(n2 - 1) > args.norm_tol:
            raise UsageError(f"s{i} is not normalized (|s{i}|^2 = {n2:.12g})")
        states.append(ket(v / math.sqrt(n2)))
    t = QubitTriple(*states)
    det = coplanarity_det(t)
    out = {
        "det": det,
        "great_circle": is_great_circle(t, args.tol),
        "degenerate_pairs": [list(p) for p in t.degenerate_pairs(args.tol)],
    }
    try:
        form = canonicalize_triple(t, args.tol)
        out["canonical"] = dict(zip("abcd", form.triple.as_tuple()[:4]), theta=form.triple.theta, reflected=form.reflected)
    except DegenerateTripleError as exc:
        out["canonical"] = None
        out["note"] = f"degenerate triple: {exc}"
    except ValueError as exc:
        out["canonical"] = None
        out["note"] = str(exc)
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        with open(args.config, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = SweepConfig.from_dict(json.loads(raw.decode("utf-8")))
    except (ValueError, UnicodeDecodeError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    fmt = args.format or cfg.output.get("format", "csv")
    path = args.out or cfg.output.get("path")
    started = utc_now()
    rows, consistent = run_sweep(cfg, workers=max(1, args.workers))
    text = render(rows, fmt)
    manifest = RunManifest(config_hash(raw), _version(), cfg.seed, started, utc_now(), len(rows))
    try:
        if path is None or path == "-":
            sys.stdout.write(text)
            sys.stderr.write(manifest.to_json())
        else:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
                fh.write(manifest.to_json())
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if consistent else EXIT_INCONSISTENT


def _version() -> str:
    from . import __version__

    return __version__


COMMANDS = {
    "verify-signalling": lambda a: _verify(a, SIGNALLING_EXTRAS),
    "verify-entanglement": lambda a: _verify(a, ENTANGLEMENT_EXTRAS),
    "verify-product": lambda a: _verify(a, PRODUCT_EXTRAS),
    "feasibility": cmd_feasibility,
    "check-great-circle": cmd_check_great_circle,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
