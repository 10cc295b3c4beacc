"""Command-line front end.

Subcommands: ``effect`` (one ALE, PD or M effect), ``compare`` (ALE vs PD
vs M for one feature), ``generate`` (write a synthetic CSV) and ``serve``
(host a built-in model over the bridge protocol).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .baselines import m_effect, pd_effect
from .bridge import BridgeConfig, BridgePredictor, make_http_server, serve_stdio
from .compare import center, compare_main_effects
from .data import DataError, Dataset, build_quantile_partition, joint_count_array, load_csv, write_csv
from .first import ale_first
from .higher import MAX_ORDER, ale_general_uncentered, remove_lower_orders
from .local import resolve_K
from .models import GeneratorSpec, fit_regression_tree, generate_synthetic, parse_expression
from .models.generators import FAMILIES
from .predictor import PredictionError
from .render import render_heatmap, render_line
from .second import ale_second


class UsageError(Exception):
    """Invalid combination of arguments (exit status 2)."""


@dataclass
class RunReport:
    command: list
    seed: int
    method: str
    features: list
    n: int
    K: list
    ledger: dict
    expected_ledger: dict
    timing_seconds: dict
    warnings: list = field(default_factory=list)
    rmse: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    kernels: str = _kernels.BACKEND


# -- sources ---------------------------------------------------------------

_GEN_KEYS = {"n": int, "rho": float, "noise": float, "response_noise": float, "d": int,
             "seg_lo": float, "seg_hi": float}


def load_data(source: str, seed: int, response: str | None) -> Dataset:
    """``path.csv`` or ``gen:<family>[,key=value...]``."""
    if source.startswith("gen:"):
        family, *opts = source[4:].split(",")
        if family not in FAMILIES:
            raise UsageError(f"unknown generator family {family!r}; choose from {', '.join(FAMILIES)}")
        kw: dict = {}
        seg = [0.0, 1.0]
        for opt in opts:
            key, _, val = opt.partition("=")
            if key not in _GEN_KEYS or not val:
                raise UsageError(f"bad generator option {opt!r}; keys: {', '.join(_GEN_KEYS)}")
            if key == "seg_lo":
                seg[0] = float(val)
            elif key == "seg_hi":
                seg[1] = float(val)
            else:
                kw[key] = _GEN_KEYS[key](val)
        kw.setdefault("n", 200)
        return generate_synthetic(GeneratorSpec(family, seed=seed, segment=tuple(seg), **kw))
    return load_csv(source, response=response)


def load_model(source: str, data: Dataset, args):
    """``expr:<text>``, ``tree:[max_leaves=N][,min_leaf=N]`` or ``bridge:...``."""
    kind, _, rest = source.partition(":")
    if kind == "expr":
        return parse_expression(rest, columns=data.columns)
    if kind == "tree":
        opts = {"max_leaves": 100, "min_leaf": 1}
        for opt in filter(None, rest.split(",")):
            key, _, val = opt.partition("=")
            if key not in opts or not val:
                raise UsageError(f"bad tree option {opt!r}; keys: max_leaves, min_leaf")
            opts[key] = int(val)
        return fit_regression_tree(data, **opts)
    if kind == "bridge":
        if rest.startswith("@"):
            cfg = BridgeConfig.from_dict(json.loads(Path(rest[1:]).read_text()))
        else:
            transport, _, target = rest.partition(":")
            if transport not in ("subprocess", "http") or not target:
                raise UsageError("bridge models are bridge:subprocess:<command>, bridge:http:<url> or bridge:@<config.json>")
            cfg = BridgeConfig(transport, target, batch_size=args.batch_size, timeout=args.timeout,
                               max_in_flight=args.max_in_flight)
        return BridgePredictor(cfg, columns=data.columns)
    raise UsageError(f"unknown model source {source!r}; use expr:, tree: or bridge:")


# -- output ----------------------------------------------------------------

def fmt(v) -> str:
    v = float(v)
    return "" if np.isnan(v) else f"{v:.17g}"


def write_table(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, header: list, rows: list, metadata: dict) -> None:
    doc = {
        "metadata": metadata,
        "columns": header,
        "rows": [[None if np.isnan(float(v)) else float(v) for v in row] for row in rows],
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def lattice_rows(breakpoints, value_arrays, counts):
    """One row per lattice corner: indices, coordinates, values, cell count."""
    shape = tuple(b.size for b in breakpoints)
    rows = []
    for idx in np.ndindex(*shape):
        coords = [b[i] for b, i in zip(breakpoints, idx)]
        count = counts[tuple(i - 1 for i in idx)] if min(idx) >= 1 else 0
        rows.append(list(idx) + coords + [a[idx] for a in value_arrays] + [count])
    return rows


# -- commands ----------------------------------------------------------------

def _features(data: Dataset, spec: str) -> list[int]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if not names:
        raise UsageError("--features needs at least one name")
    return [data.index(int(s) - 1 if s.isdigit() else s) for s in names]


def cmd_effect(args, argv) -> RunReport:
    data = load_data(args.data, args.seed, args.response)
    J = _features(data, args.features)
    r = len(J)
    if args.method == "mplot" and r != 1:
        raise UsageError("mplot supports exactly one feature")
    if len(set(J)) != r:
        raise UsageError("repeated feature")
    if args.svg and r > 2:
        raise UsageError("--svg supports one or two features")
    Ks = list(resolve_K(args.K, r))
    model = load_model(args.model, data, args)
    names = [data.columns[j] for j in J]
    warnings = []
    t0 = time.perf_counter()
    try:
        if args.method == "ale":
            if r == 1:
                eff = ale_first(model, data, J[0], Ks[0])
                bps, vals, counts = [eff.breakpoints], [eff.uncentered, eff.centered], eff.counts
                header_vals = ["uncentered", "centered"]
                empty = None
            elif r == 2:
                eff = ale_second(model, data, J[0], J[1], Ks)
                bps = list(eff.breakpoints)
                vals = [eff.uncentered, eff.main_removed, eff.centered]
                counts = eff.counts
                header_vals = ["uncentered", "main_removed", "centered"]
                empty = eff.empty
                if eff.n_imputed:
                    warnings.append(f"{eff.n_imputed} empty cells imputed from nearest nonempty cells")
            else:
                unc = ale_general_uncentered(model, data, J, Ks, max_order=args.max_order)
                eff = remove_lower_orders(unc)
                bps, vals, counts = list(unc.breakpoints), [unc.values, eff.values], unc.counts
                header_vals = ["uncentered", "centered"]
                empty = None
                if unc.empty.any():
                    warnings.append(f"{int(unc.empty.sum())} empty cells imputed from nearest nonempty cells")
            expected = (2 ** r) * data.n
        elif args.method == "pd":
            pd = pd_effect(model, data, J, K=Ks)
            parts = [build_quantile_partition(data, j, k) for j, k in zip(J, Ks)]
            counts = joint_count_array(data, parts)
            bps = [np.concatenate([[p.breakpoints[0]], g]) for p, g in zip(parts, pd.grid)]
            # PD lives on z_1..z_K; pad index 0 with NaN so rows share the lattice layout
            raw = np.full(tuple(b.size for b in bps), np.nan)
            raw[tuple(slice(1, None) for _ in J)] = pd.values
            cen = np.full_like(raw, np.nan)
            cen[tuple(slice(1, None) for _ in J)] = pd.values - np.sum(counts * pd.values) / counts.sum()
            vals, header_vals, empty = [raw, cen], ["uncentered", "centered"], None
            expected = int(np.prod([p.K for p in parts])) * data.n
        else:
            m = m_effect(model, data, J[0], Ks[0])
            part = build_quantile_partition(data, J[0], Ks[0])
            bps = [part.breakpoints]
            counts = m.sizes
            raw = np.concatenate([[np.nan], m.values])
            cen = np.concatenate([[np.nan], center(m.values, m.sizes)])
            vals, header_vals, empty = [raw, cen], ["uncentered", "centered"], None
            expected = data.n
    finally:
        if hasattr(model, "close"):
            model.close()
    elapsed = time.perf_counter() - t0

    header = [f"k_{nm}" for nm in names] + names + header_vals + ["count"]
    rows = lattice_rows(bps, vals, counts)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    outputs = []
    meta = {"method": args.method, "features": names, "K": Ks, "n": data.n, "seed": args.seed,
            "data": args.data, "model": args.model}
    if "rng" in data.metadata:
        meta["rng"] = data.metadata["rng"]
    for fmt_name in args.format:
        path = out.with_name(out.name + "." + fmt_name)
        if fmt_name == "csv":
            write_table(path, header, rows)
        else:
            write_json(path, header, rows, meta)
        outputs.append(str(path))
    if args.svg:
        path = out.with_name(out.name + ".svg")
        title = f"{args.method.upper()} effect of {', '.join(names)}"
        if r == 1:
            x = bps[0] if args.method == "ale" else bps[0][1:]
            y = vals[1] if args.method == "ale" else vals[1][1:]
            render_line(x, {args.method.upper(): y}, path, title, xlabel=names[0])
        else:
            lattice = vals[-1]
            xb, yb = bps
            if args.method == "pd":
                xb, yb, lattice = xb[1:], yb[1:], lattice[1:, 1:]
            render_heatmap(xb, yb, lattice, empty, path, title, names[0], names[1])
        outputs.append(str(path))
    return RunReport(
        command=argv, seed=args.seed, method=args.method, features=names, n=data.n, K=Ks,
        ledger={args.method: model.ledger.total_rows_predicted},
        expected_ledger={args.method: expected},
        timing_seconds={args.method: round(elapsed, 6)}, warnings=warnings, outputs=outputs,
    )


def cmd_compare(args, argv) -> RunReport:
    data = load_data(args.data, args.seed, args.response)
    J = _features(data, args.features)
    if len(J) != 1:
        raise UsageError("compare takes exactly one feature")
    K = resolve_K(args.K, 1)[0]
    model = load_model(args.model, data, args)
    truth_text = args.truth or data.metadata.get("truth")
    truth = parse_expression(truth_text, columns=data.columns) if truth_text else None
    t0 = time.perf_counter()
    try:
        comp = compare_main_effects(model, data, J[0], K, truth, truth_text)
    finally:
        if hasattr(model, "close"):
            model.close()
    elapsed = time.perf_counter() - t0
    names = list(comp.curves)
    header = ["k", comp.name, "count"] + names
    counts = np.concatenate([[0], comp.counts])
    rows = [[k, comp.breakpoints[k], counts[k]] + [comp.curves[c][k] for c in names]
            for k in range(comp.breakpoints.size)]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_name(out.name + ".csv")
    write_table(csv_path, header, rows)
    svg_path = out.with_name(out.name + ".svg")
    x = comp.breakpoints[1:]
    render_line(x, {c: comp.curves[c][1:] for c in names}, svg_path,
                f"Main effects of {comp.name}", xlabel=comp.name, tick_positions=comp.breakpoints)
    p = comp.breakpoints.size - 1
    return RunReport(
        command=argv, seed=args.seed, method="compare", features=[comp.name], n=data.n, K=[p],
        ledger=comp.ledger,
        expected_ledger={"ALE": 2 * data.n, "PD": p * data.n, "M": data.n},
        timing_seconds={"total": round(elapsed, 6)},
        rmse=comp.rmse, outputs=[str(csv_path), str(svg_path)],
    )


def cmd_generate(args, argv) -> None:
    spec = GeneratorSpec(args.family, args.n, args.seed, rho=args.rho, noise=args.noise,
                         response_noise=args.response_noise, segment=(args.seg_lo, args.seg_hi), d=args.d)
    data = generate_synthetic(spec)
    write_csv(data, args.out)
    print(json.dumps({"rows": data.n, "columns": list(data.columns) + ["y"],
                      "rng": data.metadata["rng"], "truth": data.metadata["truth"], "out": args.out}))


def cmd_serve(args, argv) -> None:
    columns = [c.strip() for c in args.columns.split(",")] if args.columns else None
    kind, _, rest = args.model.partition(":")
    if kind == "expr":
        model = parse_expression(rest, columns=columns)
    elif kind == "tree":
        if not args.data:
            raise UsageError("serving a tree needs --data to fit on")
        data = load_data(args.data, args.seed, args.response)
        model = load_model(args.model, data, args)
    else:
        raise UsageError("serve hosts expr: or tree: models")
    if args.http:
        host, _, port = args.http.rpartition(":")
        server = make_http_server(model, host or "127.0.0.1", int(port))
        print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}/", file=sys.stderr, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
    else:
        serve_stdio(model)


def _K(text: str):
    parts = [int(p) for p in text.split(",")]
    if any(p < 1 for p in parts):
        raise argparse.ArgumentTypeError("K must be >= 1")
    return parts[0] if len(parts) == 1 else parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alefx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, features_help):
        p.add_argument("--data", required=True, help="CSV path or gen:<family>[,n=N,rho=R,d=D,...]")
        p.add_argument("--model", required=True,
                       help="expr:<text> | tree:[max_leaves=N,min_leaf=N] | bridge:subprocess:<cmd> | "
                            "bridge:http:<url> | bridge:@<config.json>")
        p.add_argument("--features", required=True, help=features_help)
        p.add_argument("--K", type=_K, default=None,
                       help="intervals per axis (default 100 / 40 / 10 for 1 / 2 / 3+ features)")
        p.add_argument("--seed", type=int, default=0, help="generator seed for gen: data (default 0)")
        p.add_argument("--response", default=None, help="response column of a CSV (needed for tree:)")
        p.add_argument("--out", required=True, help="output path prefix")
        p.add_argument("--batch-size", type=int, default=4096, help="bridge rows per request")
        p.add_argument("--timeout", type=float, default=30.0, help="bridge timeout in seconds")
        p.add_argument("--max-in-flight", type=int, default=4, help="bridge concurrent HTTP requests")

    p = sub.add_parser("effect", help="compute one ALE, PD or M effect")
    common(p, "comma-separated feature names (or 1-based positions)")
    p.add_argument("--method", choices=("ale", "pd", "mplot"), default="ale")
    p.add_argument("--format", type=lambda s: [f for f in s.split(",") if f], default=["csv", "json"],
                   help="comma-separated subset of csv,json (default both)")
    p.add_argument("--svg", action="store_true", help="also write <out>.svg")
    p.add_argument("--max-order", type=int, default=MAX_ORDER,
                   help=f"largest number of features allowed for ale (default {MAX_ORDER})")

    p = sub.add_parser("compare", help="ALE vs PD vs M main effects of one feature")
    common(p, "one feature name")
    p.add_argument("--truth", default=None,
                   help="true response expression (defaults to the generator's, for gen: data)")

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--response-noise", type=float, default=0.1)
    p.add_argument("--seg-lo", type=float, default=0.0)
    p.add_argument("--seg-hi", type=float, default=1.0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="host a model over the bridge protocol (stdio or HTTP)")
    p.add_argument("--model", required=True, help="expr:<text> or tree:[...]")
    p.add_argument("--columns", default=None, help="comma-separated names usable in the expression")
    p.add_argument("--data", default=None, help="training data for tree: models")
    p.add_argument("--response", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--http", default=None, metavar="HOST:PORT", help="serve HTTP instead of stdio")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "format", None):
        bad = set(args.format) - {"csv", "json"}
        if bad:
            parser.error(f"unknown format(s): {', '.join(sorted(bad))}")
    try:
        if args.command == "effect":
            report = cmd_effect(args, ["alefx"] + argv)
        elif args.command == "compare":
            report = cmd_compare(args, ["alefx"] + argv)
        elif args.command == "generate":
            cmd_generate(args, argv)
            return 0
        else:
            cmd_serve(args, argv)
            return 0
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, PredictionError, ValueError, OSError) as exc:
        print(f"alefx: error: {exc}", file=sys.stderr)
        return 1
    report_path = Path(args.out).with_name(Path(args.out).name + ".report.json")
    report.outputs.append(str(report_path))
    report_path.write_text(json.dumps(asdict(report), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps({k: getattr(report, k) for k in ("method", "features", "n", "K", "ledger", "rmse", "warnings")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
