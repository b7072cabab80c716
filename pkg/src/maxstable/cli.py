"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
Every command that writes a file also writes ``<file>.manifest.json``, which
``maxstable replay`` re-executes and compares byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .fields import catalog
from .measures import AngularMeasure, MaxStableLaw, parse_preset, validate_moment_constraint
from .rng import RngSpec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


# --- helpers -----------------------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def load_measure(spec: str) -> AngularMeasure:
    """``preset:<name><d>``, a bare preset name, or a JSON file path."""
    name = spec[len("preset:"):] if spec.startswith("preset:") else spec
    path = Path(spec)
    try:
        if not spec.startswith("preset:") and path.suffix == ".json":
            if not path.exists():
                raise ConfigError(f"angular measure file {spec!r} not found")
            doc = json.loads(path.read_text())
            nu = AngularMeasure.from_dict(doc)
        else:
            nu = parse_preset(name)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        raise ConfigError(f"invalid angular measure {spec!r}: {e}") from None
    check = validate_moment_constraint(nu)
    if not check:
        raise ConfigError(check.message)
    return nu


def _law(alpha: float, nu_spec: str) -> MaxStableLaw:
    try:
        return MaxStableLaw(alpha, load_measure(nu_spec))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _field(name: str):
    try:
        return catalog(name)
    except KeyError as e:
        raise ConfigError(e.args[0]) from None


def _rng(seed) -> RngSpec:
    if seed is None:
        raise ConfigError("this command is randomized: pass --seed explicitly")
    try:
        return RngSpec(int(seed))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def write_manifest(command: str, argv: list[str], params: dict, seed, outputs: list[str]) -> Path | None:
    if not outputs:
        return None
    doc = {
        "command": command,
        "argv": argv,
        "parameters": params,
        "seed": seed,
        "tool_version": __version__,
        "backend": _kernels.backend(),
        "outputs": [str(Path(o)) for o in outputs],
        "sha256": {str(Path(o)): _sha256(Path(o)) for o in outputs},
    }
    path = Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


# --- commands ------------------------------------------------------------------------------------------

def cmd_sample(args, argv) -> int:
    from .sampling import realization_rows, sample_max_stable

    law = _law(args.alpha, args.nu)
    rng = _rng(args.seed)
    if args.n < 1:
        raise ConfigError("--n must be positive")
    z = sample_max_stable(law, rng, args.n, threads=args.threads).reshape(args.n, law.dim)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"z{j + 1}" for j in range(law.dim)])
    for row in z:
        w.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), args.out)
    outputs = [args.out] if args.out else []
    if args.realization:
        if law.alpha <= 0:
            raise ConfigError("realizations are dumped for alpha > 0 only")
        _, real = sample_max_stable(law, rng.child(rng.stream + 1), return_realization=True)
        rb = io.StringIO()
        rw = csv.writer(rb, lineterminator="\n")
        rw.writerow(["index", "r", "k"] + [f"u{j + 1}" for j in range(law.dim)])
        for row in realization_rows(real, law):
            rw.writerow([row[0], repr(row[1]), row[2]] + [repr(v) for v in row[3:]])
        Path(args.realization).write_text(rb.getvalue())
        outputs.append(args.realization)
    write_manifest("sample", argv, _params(args), args.seed, outputs)
    return EXIT_OK


def cmd_semigroup(args, argv) -> int:
    from .semigroup import mehler_mc, semigroup_1d

    law = _law(args.alpha, args.nu)
    f = _field(args.f)
    x = np.array(_floats(args.x))
    if x.size != law.dim:
        raise ConfigError(f"--x needs {law.dim} coordinate(s), got {x.size}")
    if args.t < 0:
        raise ConfigError("--t must be nonnegative")
    if f.dim != 1 and law.dim == 1:
        raise ConfigError("function and law dimensions differ")
    if law.dim > 1:
        from .fields import coordinate_sum
        f = coordinate_sum(f, law.dim)
    if args.method == "quad":
        if law.dim != 1:
            raise ConfigError("--method quad requires d = 1")
        if law.alpha <= 0:
            raise ConfigError("--method quad requires alpha > 0")
        val = float(semigroup_1d(law.alpha, f, args.t, x.reshape(())))
        doc = {"value": val, "method": "quad", "tolerance": 1e-12}
        seed = args.seed
    else:
        rng = _rng(args.seed)
        est = mehler_mc(law, f, args.t, x if law.dim > 1 else x.reshape(()), args.n, rng)
        doc = {"value": est.value, "std_error": est.std_error, "n": est.n, "method": "mc"}
        seed = args.seed
    doc.update({"function": f.name, "t": args.t, "x": x.tolist(), "alpha": law.alpha})
    _emit(json.dumps(doc) + "\n", args.out)
    write_manifest("semigroup", argv, _params(args), seed, [args.out] if args.out else [])
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    from .identities import RANDOMIZED_SUITES, SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    rng = None
    if any(n in RANDOMIZED_SUITES for n in names):
        rng = _rng(args.seed)
    elif args.seed is not None:
        rng = _rng(args.seed)
    alphas = tuple(_floats(args.alpha))
    if not alphas or any(a <= 0 for a in alphas):
        raise ConfigError("--alpha needs positive values")

    def one(name):
        return run_suite(name, alphas, args.quick, rng)

    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as ex:
            groups = list(ex.map(one, names))
    else:
        groups = [one(n) for n in names]
    items = [it for g in groups for it in g]
    text = "".join(it.to_json() + "\n" for it in items)
    _emit(text, args.out)
    write_manifest("verify", argv, _params(args), args.seed, [args.out] if args.out else [])
    bad = [it for it in items if not it.as_expected]
    for it in bad:
        print(f"unexpected outcome: {it.report.identity_name} ({it.report.status})", file=sys.stderr)
    return EXIT_OK if not bad else EXIT_FAIL


def cmd_path(args, argv) -> int:
    from .processes import figure_paths, rows_to_csv

    alphas = _floats(args.alpha)
    if not alphas or any(a <= 0 for a in alphas):
        raise ConfigError("--alpha needs positive values")
    if args.steps < 0 or args.T < 0:
        raise ConfigError("--steps and --T must be nonnegative")
    if args.x0 <= 0 and args.process == "frechet":
        raise ConfigError("--x0 must be positive")
    _rng(args.seed)
    rows = figure_paths(alphas, args.x0, args.T, args.steps, int(args.seed), args.process)
    _emit(rows_to_csv(rows), args.out)
    write_manifest("path", argv, _params(args), args.seed, [args.out] if args.out else [])
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    mpath = Path(args.manifest)
    try:
        doc = json.loads(mpath.read_text())
        old_argv = list(doc["argv"])
        outputs = list(doc["outputs"])
        digests = dict(doc["sha256"])
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"unreadable manifest {args.manifest!r}: {e}") from None
    with tempfile.TemporaryDirectory() as tmp:
        mapping = {o: str(Path(tmp) / f"out{i}{Path(o).suffix}") for i, o in enumerate(outputs)}
        new_argv = [mapping.get(a, a) for a in old_argv]
        code = main(new_argv)
        if code == EXIT_CONFIG:
            return EXIT_CONFIG
        ok = True
        for o in outputs:
            got = _sha256(Path(mapping[o]))
            same = got == digests[o]
            ok &= same
            print(f"{'identical' if same else 'DIFFERENT'}  {o}")
    return EXIT_OK if ok else EXIT_FAIL


# --- parser ------------------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxstable", description="Max-stable laws: sampling, semigroup, verification.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw from MS(alpha, nu)")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--nu", required=True, help="preset:<name><d> or a JSON file")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--realization", help="also dump one LePage realization (index, r, k, u...) as CSV")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("semigroup", help="evaluate P_t f(x)")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--nu", default="preset:independence1")
    s.add_argument("--f", required=True, help="catalog name (log, inv1p, atanlog, ratio, expdecay, const1, h_z:<z>)")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--x", default="1")
    s.add_argument("--method", choices=("mc", "quad"), default="quad")
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_semigroup)

    s = sub.add_parser("verify", help="run a verification suite")
    s.add_argument("--suite", default="all",
                   choices=("stein", "covariance", "poincare", "logsobolev", "commutators", "chaos", "secondorder",
                            "all"))
    s.add_argument("--alpha", default="0.5,1,2")
    s.add_argument("--quick", action="store_true", help="reduced sample sizes")
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("path", help="simulate Frechet-process or max-stable-motion paths")
    s.add_argument("--process", choices=("frechet", "motion"), default="frechet")
    s.add_argument("--alpha", default="0.5,1,2,4")
    s.add_argument("--x0", type=float, default=3.0)
    s.add_argument("--T", type=float, default=10.0)
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_path)

    s = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args, argv)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
