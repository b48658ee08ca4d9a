"""Command-line front end: ``hgff <subcommand> [flags]``.

Every table is CSV with a ``# config: {...}`` first line holding the fully
resolved configuration, followed by a header row.  Floats use 17 significant
digits so that values round-trip exactly.  Exit status is 0 on success, 2 on
usage errors and 1 on domain or capacity errors.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import green, krawtchouk, partition, sampler, verify, walks
from .errors import DomainError, HGFFError
from .graph import BoundarySpec, GraphSpec, Vertex, hamming_distance

PROVENANCE = ("method", "model", "d", "n", "m", "beta", "seed")

DEFAULTS: dict[str, dict[str, Any]] = {
    "spectrum": {"model": "nn"},
    "kraw-table": {},
    "green": {"model": "nn", "m": 1.0, "beta": 1.0, "boundary": "none", "walks": 100_000, "seed": 0, "jobs": 1},
    "sample": {"model": "nn", "m": 1.0, "beta": 1.0, "samples": 100_000, "seed": 0, "probes": "0:0,0:1", "jobs": 1},
    "partition": {"model": "nn", "m": 1.0, "beta": 1.0, "boundary": "none"},
    "sweep": {"model": "nn", "m": 1.0, "beta": 1.0, "rho": 1, "jobs": 1},
    "verify": {"level": "quick"},
}
REQUIRED = {
    "spectrum": ("d", "n"),
    "kraw-table": ("d", "n"),
    "green": ("d", "n"),
    "sample": ("d", "n"),
    "partition": ("d", "n"),
    "sweep": ("limit", "grid"),
    "verify": (),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    params: dict[str, Any]
    seed: int | None = None
    output_path: str | None = None
    format: str = "csv"
    extra: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params.get(key)

    def header(self) -> dict[str, Any]:
        return {"subcommand": self.subcommand, **self.params}


# -- formatting -----------------------------------------------------------------------


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render_csv(cfg: RunConfig, rows: Sequence[dict], prov: dict[str, Any]) -> str:
    out = io.StringIO()
    out.write("# config: " + json.dumps(cfg.header(), sort_keys=True) + "\n")
    cols: list[str] = []
    for row in rows:
        cols += [k for k in row if k not in cols]
    cols += [p for p in PROVENANCE if p not in cols]
    out.write(",".join(cols) + "\n")
    for row in rows:
        out.write(",".join(fmt(row.get(c, prov.get(c))) for c in cols) + "\n")
    return out.getvalue()


def emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- parsing helpers ------------------------------------------------------------------


def _parse_list(s, conv) -> list:
    items = s if isinstance(s, (list, tuple)) else [v for v in str(s).split(",") if v.strip()]
    try:
        return [conv(v) for v in items]
    except (TypeError, ValueError):
        raise UsageError(f"cannot parse {s!r} as a comma-separated list of {conv.__name__}") from None


def parse_int_list(s) -> list[int]:
    return _parse_list(s, int)


def parse_float_list(s) -> list[float]:
    return _parse_list(s, float)


def parse_boundary(s) -> BoundarySpec:
    if s is None or str(s).lower() == "none":
        return BoundarySpec.empty()
    try:
        return BoundarySpec.ball(int(s))
    except ValueError:
        raise UsageError(f"--boundary must be an integer radius or 'none', got {s!r}") from None


def parse_pair(s) -> tuple[int, int]:
    parts = parse_int_list(s)
    if len(parts) != 2:
        raise UsageError(f"--pair needs two vertex ranks 'x,y', got {s!r}")
    return parts[0], parts[1]


def parse_probes(s) -> list[tuple[int, int]]:
    out = []
    for item in str(s).split(","):
        item = item.strip()
        if not item:
            continue
        a, sep, b = item.partition(":")
        if not sep:
            raise UsageError(f"probe {item!r} must look like 'x:y'")
        out.append(tuple(parse_int_list([a, b])))
    return out


def _weights_of(cfg: RunConfig, g: GraphSpec) -> walks.WalkWeights:
    w = cfg["weights"]
    if w is not None:
        w = parse_float_list(w)
    return walks.make_weights(g, cfg["model"], gamma=cfg["gamma"], weights=w)


def _graph_of(cfg: RunConfig) -> GraphSpec:
    return GraphSpec(cfg["d"], cfg["n"])


def _prov(cfg: RunConfig, method: str) -> dict[str, Any]:
    return {"method": method, **{k: cfg[k] for k in PROVENANCE[1:]}}


def _rep_vertex(g: GraphSpec, rho: int) -> Vertex:
    if not 0 <= rho <= g.d:
        raise DomainError(f"rho={rho} outside [0, {g.d}]")
    return g.from_digits(walks.canonical_representative(g, rho))


# -- subcommands ----------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig) -> str:
    g = _graph_of(cfg)
    ww = _weights_of(cfg, g)
    spec = walks.eigenvalues(ww)
    rows = [{"i": i, "lambda_i": float(spec.lambdas[i]), "kappa_i": spec.degeneracies[i]} for i in range(g.d + 1)]
    return render_csv(cfg, rows, _prov(cfg, "closed_form" if walks.eigenvalues_closed_form(ww) is not None else "generic"))


def cmd_kraw_table(cfg: RunConfig) -> str:
    g = _graph_of(cfg)
    rows = []
    for i in range(g.d + 1):
        row = {"i": i}
        row.update({f"j={j}": krawtchouk.kraw_exact(g, i, j) for j in range(g.d + 1)})
        rows.append(row)
    return render_csv(cfg, rows, _prov(cfg, "exact"))


def cmd_green(cfg: RunConfig) -> str:
    g = _graph_of(cfg)
    ww = _weights_of(cfg, g)
    ms = green.MassSpec(cfg["m"], cfg["beta"])
    b = parse_boundary(cfg["boundary"]).validate(g)
    method = cfg["method"] or ("spectral" if b.is_empty else "dense")
    if cfg["pair"] is not None:
        x, y = parse_pair(cfg["pair"])
        targets = [(g.vertex(x), g.vertex(y))]
    else:
        rhos = [cfg["rho"]] if cfg["rho"] is not None else list(range(0, (g.d if b.is_empty else b.r) + 1))
        if method == "lumped":
            rhos = [0] if cfg["rho"] is None else rhos
        targets = [(g.origin, _rep_vertex(g, r)) for r in rhos]
    rows = []
    if method == "spectral":
        if not b.is_empty:
            raise DomainError("the spectral Green function needs an empty boundary; use --method dense")
        res = green.green_radial(ww, ms)
        for x, y in targets:
            rows.append({"x": x.rank, "y": y.rank, "rho": hamming_distance(g, x, y), "value": float(res.values[hamming_distance(g, x, y)])})
    elif method == "dense":
        res = green.green_dense_oracle(ww, ms, b)
        pos = {int(r): k for k, r in enumerate(res.retained)}
        for x, y in targets:
            if x.rank not in pos or y.rank not in pos:
                raise DomainError(f"vertex pair ({x.rank}, {y.rank}) touches the boundary {b}")
            rows.append({"x": x.rank, "y": y.rank, "rho": hamming_distance(g, x, y), "value": float(res.values[pos[x.rank], pos[y.rank]])})
    elif method == "lumped":
        if not ms.massless or b.is_empty:
            raise DomainError("the lumped solve covers m = 0 with a ball boundary only")
        for x, y in targets:
            if x.rank != 0 or y.rank != 0:
                raise DomainError("the lumped solve gives the origin diagonal entry only")
            rows.append({"x": 0, "y": 0, "rho": 0, "value": float(green.green_massless_origin(ww, b.r))})
    elif method == "mc":
        for x, y in targets:
            est = green.green_mc_estimate(ww, ms, b, x, y, cfg["walks"], cfg["seed"], jobs=cfg["jobs"])
            rows.append({"x": x.rank, "y": y.rank, "rho": hamming_distance(g, x, y), "value": est.estimate, "se": est.se})
    else:
        raise UsageError(f"unknown green method {method!r}")
    return render_csv(cfg, rows, _prov(cfg, method))


def cmd_sample(cfg: RunConfig) -> str:
    g = _graph_of(cfg)
    ww = _weights_of(cfg, g)
    ms = green.MassSpec(cfg["m"], cfg["beta"])
    pairs = parse_probes(cfg["probes"])
    st = sampler.accumulate_stats(ww, ms, cfg["samples"], cfg["seed"], pairs, jobs=cfg["jobs"])
    rows = []

    def row(label, emp, ana, se):
        z = (emp - ana) / se if se > 0 else math.nan
        rows.append({"pair": label, "empirical": emp, "analytic": ana, "se": se, "z_score": z})

    for (a, b), (emp, se) in st.cov_entries.items():
        row(f"{a}:{b}", emp, green.covariance(ww, ms, a, b), se)
    mean_sq, mean_sq_se = st.spatial_mean_sq
    row("spatial_mean_sq", mean_sq, sampler.spatial_mean_variance_exact(g, ms), mean_sq_se)
    row("beta_H", st.energy[0], g.vertex_count / 2.0, st.energy[1])
    return render_csv(cfg, rows, _prov(cfg, "sampler"))


def cmd_partition(cfg: RunConfig) -> str:
    g = _graph_of(cfg)
    ww = _weights_of(cfg, g)
    ms = green.MassSpec(cfg["m"], cfg["beta"])
    b = parse_boundary(cfg["boundary"]).validate(g)
    method = cfg["method"] or ("spectral" if b.is_empty else "dense")
    if method not in ("spectral", "dense"):
        raise UsageError(f"partition method must be spectral or dense, got {method!r}")
    out = partition.partition_report(ww, ms, b, method).as_dict()
    out["config"] = cfg.header()
    out["seed"] = cfg["seed"]
    return json.dumps(out, sort_keys=True, indent=2) + "\n"


def _map_grid(fn: Callable[[Any], list[dict]], grid: Sequence, jobs: int) -> list[dict]:
    # one task per grid point; rows are concatenated in grid order
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(fn, grid))
    else:
        parts = [fn(p) for p in grid]
    return [row for part in parts for row in part]


def cmd_sweep(cfg: RunConfig) -> str:
    limit = cfg["limit"]
    model, m, beta, rho, gamma, jobs = cfg["model"], cfg["m"], cfg["beta"], cfg["rho"], cfg["gamma"], cfg["jobs"]
    if model == "custom":
        # custom weights are tied to one d, so only the mass sweeps are meaningful
        if limit in ("dinf", "ninf"):
            raise DomainError("custom weights have no constructive d or n limit; sweep m0/minf at fixed d, n instead")
    if limit in ("m0", "minf"):
        grid = sorted(parse_float_list(cfg["grid"]), reverse=(limit == "m0"))
        g = _graph_of(_need(cfg, "d", "n"))
        ww = _weights_of(cfg, g)
        if limit == "m0":
            x, y = parse_pair(cfg["pair"]) if cfg["pair"] is not None else (0, _rep_vertex(g, rho).rank)
            lz = {r["m"]: r for r in partition.massless_convergence_table(ww, beta, grid)}

            def point(mm):
                r = green.limit_diagnostic_m_to_zero(ww, beta, x, y, [mm])[0]
                r["rho"] = hamming_distance(g, x, y)
                r["log_mz"] = lz[r["m"]]["log_mz"]
                r["log_mz_gap"] = lz[r["m"]]["gap"]
                return [r]

            rows = _map_grid(point, grid, jobs)
            method = "m0"
        else:
            rows = _map_grid(lambda mm: partition.massive_convergence_table(ww, beta, [mm]), grid, jobs)
            method = "minf"
        return render_csv(cfg, rows, _prov(cfg, method))
    if limit == "dinf":
        grid = sorted(parse_int_list(cfg["grid"]))
        n = _need(cfg, "n")["n"]
        if m == 0:
            if model != "nn":
                raise DomainError("the massless large-d sweep is defined for the nn model")
            rows = _map_grid(lambda d: green.massless_variance_sweep(n, [d], beta), grid, jobs)
            return render_csv(cfg, rows, _prov(cfg, "dinf_massless"))

        def point(d):
            row = green.limit_diagnostic_large_d(model, n, m, rho, [d], beta, gamma)[0]
            fe = partition.finite_size_free_energy(model, n, m, beta, [d], gamma)[0]
            row.update({"rho": rho, "free_energy": fe["free_energy"], "free_energy_limit": fe["limit"], "free_energy_gap": fe["gap"]})
            return [row]

        return render_csv(cfg, _map_grid(point, grid, jobs), _prov(cfg, "dinf"))
    if limit == "ninf":
        grid = sorted(parse_int_list(cfg["grid"]))
        d = _need(cfg, "d")["d"]

        def point(n):
            row = green.limit_diagnostic_large_n(model, d, m, rho, [n], beta, gamma)[0]
            row["rho"] = rho
            row["free_energy"] = partition.free_energy_per_site(walks.make_weights(GraphSpec(d, n), model, gamma), green.MassSpec(m, beta))
            return [row]

        rows = _map_grid(point, grid, jobs)
        limit_fe = partition.free_energy_limit(model, m, beta, "n_to_inf", d=d, gamma=gamma) if m > 0 else None
        for row in rows:
            row["free_energy_limit"] = limit_fe
        return render_csv(cfg, rows, _prov(cfg, "ninf"))
    raise UsageError(f"--limit must be one of m0, minf, dinf, ninf, got {limit!r}")


def _need(cfg: RunConfig, *keys) -> RunConfig:
    missing = [k for k in keys if cfg[k] is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))
    return cfg


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    report = verify.run_verification_suite(cfg["level"])
    for gr in report["groups"]:
        print(f"{'PASS' if gr['passed'] else 'FAIL'} {gr['name']} ({gr['seconds']:.2f} s): {gr['detail']}", file=sys.stderr)
        del gr["seconds"]  # keep the report byte-stable across runs
    report["config"] = cfg.header()
    report["group_count"] = len(report["groups"])
    return json.dumps(report, sort_keys=True, indent=2) + "\n", 0 if report["passed"] else 1


COMMANDS = {
    "spectrum": cmd_spectrum,
    "kraw-table": cmd_kraw_table,
    "green": cmd_green,
    "sample": cmd_sample,
    "partition": cmd_partition,
    "sweep": cmd_sweep,
}


# -- argument parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("--output", help="write to this path instead of stdout")

    graph = _Parser(add_help=False)
    graph.add_argument("--d", type=int)
    graph.add_argument("--n", type=int)

    model = _Parser(add_help=False)
    model.add_argument("--model", choices=walks.MODELS)
    model.add_argument("--gamma", type=float)
    model.add_argument("--weights", help="comma-separated w_0..w_d for the custom model")

    mass = _Parser(add_help=False)
    mass.add_argument("--m", type=float)
    mass.add_argument("--beta", type=float)

    p = _Parser(prog="hgff", description="Gaussian free fields on Hamming graphs")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("spectrum", parents=[common, graph, model], help="eigenvalues lambda_i and multiplicities")
    sub.add_parser("kraw-table", parents=[common, graph], help="Krawtchouk table K_i(j)")

    s = sub.add_parser("green", parents=[common, graph, model, mass], help="Green function values")
    s.add_argument("--boundary")
    s.add_argument("--method", choices=("spectral", "dense", "mc", "lumped"))
    s.add_argument("--rho", type=int)
    s.add_argument("--pair")
    s.add_argument("--walks", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)

    s = sub.add_parser("sample", parents=[common, graph, model, mass], help="sampler statistics against exact covariances")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--probes")
    s.add_argument("--jobs", type=int)

    s = sub.add_parser("partition", parents=[common, graph, model, mass], help="log partition function (JSON)")
    s.add_argument("--boundary")
    s.add_argument("--method", choices=("spectral", "dense"))

    s = sub.add_parser("sweep", parents=[common, graph, model, mass], help="limit diagnostics along a grid")
    s.add_argument("--limit", choices=("m0", "minf", "dinf", "ninf"))
    s.add_argument("--grid")
    s.add_argument("--rho", type=int)
    s.add_argument("--pair")
    s.add_argument("--jobs", type=int)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suite (JSON report)")
    s.add_argument("--level", choices=("quick", "full"))
    return p


_INT_KEYS = ("d", "n", "rho", "walks", "seed", "samples", "jobs")
_FLOAT_KEYS = ("m", "beta", "gamma")


def resolve(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    given = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config", "output")}
    from_file: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        from_file = {k.replace("-", "_"): v for k, v in from_file.items() if k not in ("subcommand", "command")}
        known = set(vars(args))
        unknown = sorted(set(from_file) - known)
        if unknown:
            raise UsageError(f"unknown config key(s) for {cmd}: {', '.join(unknown)}")
    params = {k: None for k in vars(args) if k not in ("command", "config", "output")}
    params.update(DEFAULTS[cmd])
    params.update(from_file)
    params.update(given)
    try:
        for k in _INT_KEYS:
            if params.get(k) is not None:
                params[k] = int(params[k])
        for k in _FLOAT_KEYS:
            if params.get(k) is not None:
                params[k] = float(params[k])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad option value: {exc}") from None
    missing = [k for k in REQUIRED[cmd] if params.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))
    for k in ("d", "n"):
        if params.get(k) is not None and params[k] < 2:
            raise UsageError(f"--{k} must be an integer >= 2, got {params[k]}")
    if cmd == "sweep" and params["limit"] == "ninf" and params.get("n") is not None:
        raise UsageError("--n is the swept variable for --limit ninf; pass it via --grid")
    if cmd == "sweep" and params["limit"] == "dinf" and params.get("d") is not None:
        raise UsageError("--d is the swept variable for --limit dinf; pass it via --grid")
    if params.get("jobs") is not None and params["jobs"] < 1:
        raise UsageError(f"--jobs must be positive, got {params['jobs']}")
    fmt_ = "json" if cmd in ("partition", "verify") else "csv"
    return RunConfig(cmd, params, params.get("seed"), args.output, fmt_)


def parse_and_dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        cfg = resolve(args)
        if cfg.subcommand == "verify":
            text, code = cmd_verify(cfg)
        else:
            text, code = COMMANDS[cfg.subcommand](cfg), 0
        emit(cfg, text)
        return code
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hgff: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except HGFFError as exc:
        print(f"hgff: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hgff: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
