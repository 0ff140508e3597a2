"""Command line front end: ``noptimal <command> --field ... [options]``.

Every run prints (or writes with ``--out``) one JSON document holding the
echoed config, the measure convention, package versions and the result; the
same config gives byte-identical output.  ``--format csv`` emits a table
where the result has one.  A ``--config`` file holds ``key = value`` lines
using the long option names; flags on the command line win.

Exit codes: 0 success, 2 malformed input, 3 cap exceeded, 4 invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapExceededError, InvariantError, ParseError
from .ring import (
    factor_rational_prime,
    format_element,
    parse_element,
    parse_field,
)

from .measures import CONVENTION  # noqa: E402

EXIT_PARSE, EXIT_CAP, EXIT_INVARIANT = 2, 3, 4


# ---------------------------------------------------------------------------
# output plumbing


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _versions() -> dict:
    out = {"noptimal": __version__}
    for name in ("numpy", "scipy", "sympy", "mpmath", "shapely"):
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "missing"
    return out


def _plain(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _document(command: str, config: dict, result: dict) -> dict:
    return {"command": command, "config": config, "convention": CONVENTION,
            "versions": _versions(), "result": result}


def render_json(doc: dict) -> str:
    return json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"


def render_csv(doc: dict, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# command: {doc['command']}\n# convention: {CONVENTION}\n")
    buf.write("# versions: " + json.dumps(doc["versions"], sort_keys=True) + "\n")
    buf.write("# config: " + json.dumps(_plain(doc["config"]), sort_keys=True) + "\n")
    if rows:
        fields = list(rows[0])
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _plain(v) for k, v in r.items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# input helpers


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ParseError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def _element(x):
    if isinstance(x, str):
        return parse_element(x)
    if isinstance(x, int):
        return parse_element(str(x))
    if isinstance(x, (list, tuple)) and len(x) in (1, 2) and all(isinstance(c, int) for c in x):
        return parse_element(f"{x[0]}+{x[1] if len(x) == 2 else 0}*w")
    raise ParseError(f"cannot read element {x!r}")


def read_set(path: str):
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("elements", data.get("set"))
    if not isinstance(data, list):
        raise ParseError("a set file holds a JSON list of elements (or {'elements': [...]})")
    return [_element(x) for x in data]


def read_region(path: str):
    from .regions import region_from_dict

    data = _read_json(path)
    if not isinstance(data, dict):
        raise ParseError("a region file holds one JSON object")
    return region_from_dict(data)


def _vector(text: str | None):
    """'1.5', '1.5,2' or a complex literal '1+2j'."""
    if text is None:
        return None
    try:
        if "j" in text:
            z = complex(text.replace(" ", ""))
            return (z.real, z.imag)
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise ParseError(f"cannot read vector {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ParseError(f"cannot read number list {text!r}") from exc


def _prime(k, p: int, which: int):
    try:
        primes = factor_rational_prime(k, p)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    if not 0 <= which < len(primes):
        raise ParseError(f"{p} has {len(primes)} prime(s) above it; --which {which} is out of range")
    return primes[which]


def _load_grid(args, k):
    from .measures import DensityGrid, default_box

    if getattr(args, "grid", None):
        g = DensityGrid.load(args.grid)
        if g.field != k:
            raise ParseError(f"grid belongs to {g.field.spec}, not {k.spec}")
        return g
    if getattr(args, "region", None):
        lo, hi = default_box(k)
        if args.box:
            b = _floats(args.box)
            lo, hi = tuple(b[: len(lo)]), tuple(b[len(lo):])
        return DensityGrid.from_region(k, read_region(args.region), lo, hi, args.res)
    raise ParseError("pass --grid STEM or --region FILE")


def _region_or_grid(args, k):
    if getattr(args, "region", None):
        return read_region(args.region)
    if getattr(args, "grid", None):
        return _load_grid(args, k).as_region()
    raise ParseError("pass --region FILE or --grid STEM")


# ---------------------------------------------------------------------------
# commands; each returns (result dict, csv rows or None)


def cmd_field_info(args, k):
    res = {"field": k.spec, "d": k.d, "degree": k.degree, "disc": k.disc,
           "signature": list(k.signature), "torsion_units": k.torsion_units,
           "covolume": math.sqrt(abs(k.disc))}
    if k.degree == 2:
        res.update(omega=k.omega_description, class_number=k.class_number)
    if k.is_real:
        res.update(fundamental_unit=format_element(k.fundamental_unit, k), regulator=k.regulator,
                   unit_norm=k.unit_norm)
    return res, [res]


def cmd_p_ordering(args, k):
    from .orderings import AMBIENT, p_ordering

    P = _prime(k, args.prime, args.which)
    S = read_set(args.set) if args.set else AMBIENT
    r = p_ordering(k, S, P, args.n)
    rows = [{"index": i, "element": format_element(x, k), "valuation": v}
            for i, (x, v) in enumerate(zip(r.sequence, r.valuations))]
    return {"prime": P.describe(), "norm": P.norm, "sequence": [row["element"] for row in rows],
            "valuations": list(r.valuations), "ambient": S == AMBIENT}, rows


def cmd_factorial(args, k):
    from .orderings import generalized_factorial

    f = generalized_factorial(k, args.n)
    rows = [{"prime": P.describe(), "norm": P.norm, "exponent": e} for P, e in f.exponents]
    return {"n": args.n, "factors": rows, "norm": str(f.norm), "log_norm": f.log_norm()}, rows


def cmd_certify(args, k):
    from .optimal import certify_n_optimal, certify_via_volume, format_set

    S = read_set(args.set)
    out = {"set": format_set(k, S), "n": len(set(S)) - 1}
    if args.route in ("direct", "both"):
        v = certify_n_optimal(k, S)
        out["status"] = v.status
        out["witness"] = None if v.witness is None else {
            "prime": v.witness.prime.describe(), "exponent": v.witness.exponent,
            "crowded_class": format_element(v.witness.crowded_class, k),
            "crowded_count": v.witness.crowded_count,
            "sparse_class": format_element(v.witness.sparse_class, k),
            "sparse_count": v.witness.sparse_count}
    if args.route in ("volume", "both"):
        out["volume_route"] = "optimal" if certify_via_volume(k, S) else "fails"
    if args.route == "both" and (out["status"] == "optimal") != (out["volume_route"] == "optimal"):
        raise InvariantError("direct and volume routes disagree")
    return out, [{"status": out.get("status", out.get("volume_route"))}]


def cmd_search(args, k):
    from .optimal import format_set, search_n_optimal

    r = search_n_optimal(k, args.n, args.box, normalize=not args.raw, node_cap=args.cap)
    sets = [format_set(k, S) for S in r.sets]
    return ({"n": args.n, "box": args.box, "sets": sets, "complete": r.complete, "nodes": r.nodes,
             "resume_token": r.resume_token, "notes": r.notes},
            [{"index": i, "set": " ".join(s)} for i, s in enumerate(sets)])


def cmd_count(args, k):
    from .counting import count_norm_pairs

    a = parse_element(args.a)
    X = float(args.X)
    r = count_norm_pairs(k, a, X, collect=args.list)
    out = {"a": format_element(a, k), "X": X, "count": r.count}
    if args.list:
        out["pairs"] = [[format_element(x, k), format_element(k.sub(a, x), k)] for x in r.points]
    return out, [{"a": out["a"], "X": X, "count": r.count}]


def cmd_unit_eq(args, k):
    from .counting import unit_equation_solutions

    al = [parse_element(x) for x in (args.alpha1, args.alpha2, args.alpha3)]
    r = unit_equation_solutions(k, *al, exponent_bound=args.bound)
    sols = [[format_element(u, k) for u in s] for s in r.solutions]
    return ({"alphas": [format_element(x, k) for x in al], "nu": r.nu, "solutions": sols,
             "certified": r.certified, "exponent_bound": r.exponent_bound,
             "certificate_bound": r.certificate_bound},
            [{"lambda1": s[0], "lambda2": s[1]} for s in sols])


def cmd_ideal_sum(args, k):
    from .counting import principal_ideal_sum

    r = principal_ideal_sum(k, float(args.X), args.r)
    res = {"X": float(args.X), "r": args.r, "value": r.value, "ideal_count": r.ideal_count,
           "main_term": r.main_term, "ratio": r.ratio}
    return res, [res]


def cmd_sector_primes(args, k):
    from .counting import sector_prime_survey
    from .regions import SectorAnnulus

    U = read_region(args.region) if args.region else SectorAnnulus(0.5, 1.0, 0.0, math.pi / 4)
    rows = [{"t": r.t, "lattice_points": r.lattice_points, "prime_generators": r.prime_generators,
             "density": r.density} for r in sector_prime_survey(k, U, _floats(args.dilations))]
    return {"region": U.to_dict(), "rows": rows}, rows


def cmd_energy(args, k):
    from .measures import energy

    g = _load_grid(args, k)
    r = energy(g, _floats(args.T) if args.T else ())
    res = r.to_dict()
    res["resolution"] = list(g.shape)
    rows = [{"T": "inf", "energy": r.I, "error": r.quadrature_error_bound}]
    rows += [{"T": T, "energy": v, "error": r.I_T_error[T]} for T, v in r.I_T.items()]
    return res, rows


def cmd_energy_min(args, k):
    from .measures import disk_energy_exact, minimize_energy, symmetric_difference_from_disk

    start = _load_grid(args, k) if (args.grid or args.region) else None
    r = minimize_energy(k, args.res, tol=args.tol, max_iter=args.max_iter, start=start)
    res = {"I": r.report.I, "error_bound": r.report.quadrature_error_bound,
           "converged": r.converged, "iterations": r.iterations, "mass": r.grid.mass,
           "resolution": list(r.grid.shape)}
    if k.is_imaginary:
        res["disk_energy"] = disk_energy_exact(k)
        res["symmetric_difference_from_disk"] = symmetric_difference_from_disk(r.grid)
    if args.out_dir:
        stem = Path(args.out_dir) / "minimizer"
        r.grid.save(stem)
        atomic_write_text(Path(args.out_dir) / "trace.csv", r.trace_csv())
        res["snapshot"] = str(stem.with_suffix(".bin"))
        res["trace"] = str(Path(args.out_dir) / "trace.csv")
    rows = [{"iteration": t.iteration, "step": t.step, "energy": t.energy, "accepted": t.accepted}
            for t in r.trace]
    res["trace_rows"] = rows
    return res, rows


def cmd_collapse(args, k):
    from .measures import collapse, energy

    g = _load_grid(args, k)
    center = None
    if args.center is not None:
        c = _vector(args.center)
        center = complex(*c) if k.is_imaginary else c[0]
    c = collapse(g, args.coord, center)
    res = {"coordinate": args.coord, "mass_before": g.mass, "mass_after": c.mass,
           "energy_before": energy(g).I, "energy_after": energy(c).I}
    if args.save:
        c.save(args.save)
        res["snapshot"] = str(Path(args.save).with_suffix(".bin"))
    return res, [res]


def cmd_quantize(args, k):
    from .measures import energy_discrete, quantize

    U = _region_or_grid(args, k)
    r = quantize(k, U, args.n)
    res = {"n": args.n, "scale": r.scale, "count": r.count,
           "points": [format_element(p, k) for p in r.points]}
    if r.count >= 2 and args.energy:
        res["discrete_energy"] = energy_discrete(k, r.points, r.scale)
    return res, [{"element": p} for p in res["points"]]


def cmd_discrepancy(args, k):
    from .discrepancy import count_region, main_term, max_discrepancy_lower

    U = _region_or_grid(args, k)
    t = _vector(args.t) or (1.0,)
    v = _vector(args.v) or (0.0,)
    if len(t) == 1:
        t = t[0]
    if len(v) == 1:
        v = v[0]
    N = count_region(k, U, t, v)
    mt = main_term(k, U, t)
    res = {"N": N, "main_term": mt, "D": N - mt}
    if args.budget:
        lb = max_discrepancy_lower(k, U, t, args.budget, seed=args.seed)
        res["lower_bound"] = {"value": lb.value, "witness": lb.witness.to_dict(), "samples": lb.samples}
    return res, [{"N": N, "main_term": mt, "D": N - mt}]


def cmd_find_bad_dilate(args, k):
    from .discrepancy import find_bad_dilate

    U = _region_or_grid(args, k)
    r = find_bad_dilate(k, U, budget=args.budget, seed=args.seed)
    res = r.to_dict()
    row = {"status": res["status"], "samples": r.samples}
    if r.witness is not None:
        row.update(D=r.witness.D, N=r.witness.N)
    return res, [row]


def cmd_constants(args, k):
    from .constants import field_constants

    c = field_constants(k)
    d = c.to_dict()
    rows = [{"name": n, "value": d[n]["value"], "error": d[n]["error"]}
            for n in ("rho", "gamma_k", "gamma_Q", "L1", "L1prime", "paper_constant")]
    return d, rows


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--field", required=True, help='"Q", "Q(i)" or "Q(sqrt:D)"')
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write output here (atomically) instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="recorded in the config; runs are serial")
    p.add_argument("--config", help="key = value file of option defaults")


def _grid_inputs(p, res_default=128):
    p.add_argument("--grid", help="snapshot stem (STEM.bin + STEM.json)")
    p.add_argument("--region", help="region JSON file")
    p.add_argument("--res", type=int, default=res_default)
    p.add_argument("--box", help="lo..., hi... of the grid box, comma separated")


COMMANDS = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noptimal", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        COMMANDS[name] = fn
        return p

    add("field-info", cmd_field_info, "invariants of the field")
    p = add("p-ordering", cmd_p_ordering, "P-ordering of a set or of O_k")
    p.add_argument("--prime", type=int, required=True, help="rational prime below P")
    p.add_argument("--which", type=int, default=0, help="index of P among the primes above p")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--set", help="set JSON file (default: all of O_k)")
    p = add("factorial", cmd_factorial, "generalized factorial n!_k")
    p.add_argument("--n", type=int, required=True)
    p = add("certify", cmd_certify, "decide n-optimality of a set")
    p.add_argument("--set", required=True)
    p.add_argument("--route", choices=("direct", "volume", "both"), default="direct")
    p = add("search", cmd_search, "exhaustive search for n-optimal sets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--box", type=int, required=True)
    p.add_argument("--cap", type=int, default=10**7, help="DFS node cap")
    p.add_argument("--raw", action="store_true", help="skip normalization up to symmetry")
    p = add("count", cmd_count, "pairs (x, y) with x + y = a and |N(x) N(y)| <= X^2")
    p.add_argument("--a", required=True)
    p.add_argument("--X", required=True)
    p.add_argument("--list", action="store_true")
    p = add("unit-eq", cmd_unit_eq, "solutions of a1 u1 + a2 u2 = a3 in units")
    p.add_argument("--alpha1", default="1")
    p.add_argument("--alpha2", default="1")
    p.add_argument("--alpha3", default="1")
    p.add_argument("--bound", type=int, help="unit exponent bound (default: certified)")
    p = add("ideal-sum", cmd_ideal_sum, "sum of log(X/N(I))^r over principal ideals")
    p.add_argument("--X", required=True)
    p.add_argument("--r", type=int, default=0)
    p = add("sector-primes", cmd_sector_primes, "prime generators in dilated regions")
    p.add_argument("--region")
    p.add_argument("--dilations", default="5,10,20,40")
    p = add("energy", cmd_energy, "log energy of a density grid")
    _grid_inputs(p)
    p.add_argument("--T", help="truncation levels, comma separated")
    p = add("energy-min", cmd_energy_min, "energy minimizer")
    _grid_inputs(p)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--out-dir", help="directory for the snapshot and trace CSV")
    p = add("collapse", cmd_collapse, "collapse a density grid along a coordinate")
    _grid_inputs(p)
    p.add_argument("--coord", type=int, default=1)
    p.add_argument("--center")
    p.add_argument("--save", help="snapshot stem for the collapsed grid")
    p = add("quantize", cmd_quantize, "lattice points of O_k in sU")
    _grid_inputs(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--energy", action="store_true", help="also report the discrete energy")
    p = add("discrepancy", cmd_discrepancy, "N_t(U, v) and D_t(U, v)")
    _grid_inputs(p)
    p.add_argument("--t")
    p.add_argument("--v")
    p.add_argument("--budget", type=int, default=0, help="also sample shifts for a lower bound")
    p = add("find-bad-dilate", cmd_find_bad_dilate, "search (t, v) with |D| > 1")
    _grid_inputs(p)
    p.add_argument("--budget", type=int, default=10**6)
    add("constants", cmd_constants, "zeta residue, L-values and Euler-Kronecker constants")
    return parser


def read_config(path: str) -> list[str]:
    """Turn ``key = value`` lines into argv tokens; ``command = x`` names the subcommand."""
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError as exc:
        raise ParseError(f"no such config file: {path}") from exc
    tokens, command = [], None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "command":
            command = value
        elif value.lower() in ("true", "yes", "on"):
            tokens.append(f"--{key}")
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens += [f"--{key}", value]
    return ([command] if command else []) + tokens


def _expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ParseError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    cfg = read_config(path)
    if cfg and not cfg[0].startswith("--"):
        command, cfg = cfg[0], cfg[1:]
        if not rest or rest[0].startswith("-"):
            rest = [command] + rest
    # file values first so command-line flags override them
    return rest[:1] + cfg + rest[1:] + ["--config", path]


def run(argv: list[str] | None = None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    try:
        argv = _expand_config(argv)
        parser = build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        k = parse_field(args.field)
        config = {key: val for key, val in sorted(vars(args).items()) if key not in ("out",)}
        result, rows = COMMANDS[args.command](args, k)
        doc = _document(args.command, config, result)
        text = render_csv(doc, rows or []) if args.format == "csv" else render_json(doc)
        if args.out:
            atomic_write_text(args.out, text)
        else:
            stdout.write(text)
        if result.get("complete") is False:
            # partial results are still written so the run can be resumed
            print("cap exceeded: search incomplete, see resume_token", file=sys.stderr)
            return EXIT_CAP
        return 0
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def main() -> None:
    sys.exit(run())
