"""Command-line entry point: ``nobelgraph <subcommand> ...``.

Exit status is 0 on success, 1 on user error (bad flags, bad input files,
invalid queries) and 2 on internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from . import __version__
from .community import format_profiles, louvain, profile_communities
from .errors import NobelGraphError, SchemaViolation
from .ingest import IngestError, ingest_stream
from .metrics import centrality_table, small_world_report
from .projection import ATTRIBUTE_NAMES, attributes_by_name, build_projection, connected_components, largest_component
from .qa import ENDPOINT_ENV, TRANSLATORS, evaluate, make_translator, repl
from .qagen import DEFAULT_MIX, generate_finetune_pairs, generate_mcq, write_jsonl
from .query import QueryError, execute, explain, parse
from .schema import load_schema
from .store import PropertyGraph, format_growth_table, growth_rows, snapshot_read, snapshot_write, stats
from .synthetic import SyntheticConfig, synthetic_jsonl

log = logging.getLogger("nobelgraph")


class UsageError(Exception):
    """Bad invocation or bad user input; exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(text: str, out=None) -> None:
    (out or sys.stdout).write(text)


def _seed(args) -> int:
    if args.seed is None:
        print(f"notice: no --seed given for '{args.command}', using seed 0", file=sys.stderr)
        return 0
    return args.seed


def _load(args, must_exist: bool = True) -> PropertyGraph:
    schema = load_schema(args.schema) if getattr(args, "schema", None) else None
    path = Path(args.store)
    if not path.exists():
        if must_exist:
            raise UsageError(f"store not found: {path}")
        return PropertyGraph(schema)
    return snapshot_read(path, schema)


def _projection(store: PropertyGraph, names):
    attrs = attributes_by_name(names) if names else None
    return build_projection(store, attrs)


def _attr_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    names = [t.strip() for t in text.split(",") if t.strip()]
    unknown = [n for n in names if n not in ATTRIBUTE_NAMES]
    if unknown or not names:
        raise UsageError(f"--attributes must list some of {', '.join(ATTRIBUTE_NAMES)}")
    return names


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    store = _load(args, must_exist=False)
    try:
        with open(args.input, encoding="utf-8") as fh:
            report = ingest_stream(fh, store, source=args.source, strict=args.strict)
    except IngestError as exc:
        raise UsageError(f"ingest failed (store unchanged): {exc}") from exc
    snapshot_write(store, args.store)
    if args.format == "jsonl":
        _emit(report.to_json() + "\n")
    else:
        _emit(report.format_text())
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    return 0


def cmd_stats(args) -> int:
    summary = stats(_load(args))
    if args.format == "jsonl":
        _emit("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in growth_rows(summary)))
    else:
        _emit(format_growth_table(summary))
    return 0


def cmd_project(args) -> int:
    g = _projection(_load(args), _attr_list(args.attributes))
    sizes = [len(c) for c in connected_components(g)]
    if args.largest:
        g = largest_component(g)
    text = g.edge_list_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    summary = {"vertices": g.n, "edges": g.m, "attributes": list(g.attributes),
               "component_sizes": sizes[:10], "components": len(sizes)}
    print(json.dumps(summary), file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_analyze(args) -> int:
    seed = _seed(args)
    full = _projection(_load(args), _attr_list(args.attributes))
    g = largest_component(full)
    report = small_world_report(g, seed, c_ratio_min=args.c_ratio_min, l_ratio_max=args.l_ratio_max)
    table = centrality_table(g, damping=args.damping)
    header = f"projection: {full.n} vertices, {full.m} edges; largest component {g.n} vertices\n\n"
    text = header + report.format_table() + "\n" + table.format_table(args.top)
    records = [{"kind": "small_world", "seed": seed, "projection_n": full.n, "projection_m": full.m,
                **report.to_dict()}]
    records += [{"kind": "centrality", "seed": seed, **r} for r in table.top_records(args.top)]
    jsonl = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    if args.report:
        out = Path(args.report)
        out.mkdir(parents=True, exist_ok=True)
        (out / "analysis.txt").write_text(text, encoding="utf-8")
        (out / "analysis.jsonl").write_text(jsonl, encoding="utf-8")
    _emit(jsonl if args.format == "jsonl" else text)
    return 0


def cmd_communities(args) -> int:
    seed = _seed(args)
    store = _load(args)
    g = _projection(store, _attr_list(args.attributes))
    if not args.all_vertices:
        g = largest_component(g)
    part = louvain(g, seed=seed, resolution=args.resolution)
    profiles = profile_communities(store, g, part, top=args.top)
    lines = [json.dumps({"kind": "partition", "seed": seed, "modularity": part.modularity,
                         "communities": part.n_communities, "passes": part.pass_count,
                         "resolution": part.resolution, "vertices": g.n}, ensure_ascii=False)]
    lines += [json.dumps({"kind": "community", "seed": seed, **p.to_dict()}, ensure_ascii=False)
              for p in profiles]
    lines += [json.dumps({"kind": "member", "seed": seed, "community": c, "name": g.names[v],
                          "node_id": g.ids[v]}, ensure_ascii=False)
              for v, c in sorted(enumerate(part.assignment), key=lambda t: (t[1], g.names[t[0]]))]
    jsonl = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(jsonl, encoding="utf-8")
    if args.format == "jsonl":
        _emit(jsonl)
    else:
        _emit(f"seed {seed}\n" + format_profiles(profiles, part.modularity))
    return 0


def _run_query(text: str, store: PropertyGraph, args) -> None:
    q = parse(text, store.schema)
    if args.explain:
        _emit(explain(q, store) + "\n")
        return
    table = execute(q, store)
    _emit(table.to_jsonl() if args.format == "jsonl" else table.format_table())


def cmd_query(args) -> int:
    store = _load(args)
    if args.repl:
        while True:
            sys.stdout.write("cypher> ")
            sys.stdout.flush()
            line = sys.stdin.readline()
            if not line or line.strip() in (":quit", ":q"):
                return 0
            if not line.strip():
                continue
            try:
                _run_query(line, store, args)
            except (QueryError, SchemaViolation) as exc:
                print(f"error: {exc}", file=sys.stderr)
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8")
    elif args.cypher:
        text = args.cypher
    else:
        raise UsageError("give a query, --file or --repl")
    _run_query(text, store, args)
    return 0


def _parse_counts(text: str) -> dict[int, int]:
    out = {}
    try:
        for part in text.split(","):
            hop, n = part.split(":")
            out[int(hop)] = int(n)
    except ValueError:
        raise UsageError(f"--counts must look like 1:100,2:100, got {text!r}") from None
    if any(h not in (1, 2, 3, 4) or n < 0 for h, n in out.items()):
        raise UsageError("--counts hops must be 1..4 with non-negative counts")
    return out


def _parse_mix(text: str) -> dict[tuple[int, ...], float]:
    out = {}
    try:
        for part in text.split(","):
            hops, frac = part.split(":")
            lo, _, hi = hops.partition("-")
            out[tuple(range(int(lo), int(hi or lo) + 1))] = float(frac)
    except ValueError:
        raise UsageError(f"--mix must look like 1-2:0.6,3-4:0.4, got {text!r}") from None
    if abs(sum(out.values()) - 1.0) > 1e-9:
        raise UsageError("--mix fractions must sum to 1")
    return out


def cmd_generate(args) -> int:
    seed = _seed(args)
    if not args.mcq and not args.finetune:
        raise UsageError("give --mcq and/or --finetune output paths")
    store = _load(args)
    if args.mcq:
        skipped: list[dict] = []
        items = generate_mcq(store, counts=_parse_counts(args.counts), seed=seed, skipped=skipped)
        write_jsonl(args.mcq, (i.to_json() for i in items))
        per_hop: dict[int, int] = {}
        for i in items:
            per_hop[i.hops] = per_hop.get(i.hops, 0) + 1
        print(json.dumps({"kind": "mcq", "seed": seed, "items": len(items), "skipped": len(skipped),
                          "per_hop": {str(k): v for k, v in sorted(per_hop.items())}}))
        for s in skipped[:10]:
            print(f"skipped hop {s['hops']} item {s['index']}: {s['reason']}", file=sys.stderr)
    if args.finetune:
        mix = _parse_mix(args.mix) if args.mix else DEFAULT_MIX
        try:
            pairs = generate_finetune_pairs(store, mix=mix, n=args.pairs, seed=seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        write_jsonl(args.finetune, (json.dumps(p, ensure_ascii=False) for p in pairs))
        per_hop = {}
        for p in pairs:
            per_hop[p["hops"]] = per_hop.get(p["hops"], 0) + 1
        print(json.dumps({"kind": "finetune", "seed": seed, "pairs": len(pairs),
                          "per_hop": {str(k): v for k, v in sorted(per_hop.items())}}))
    return 0


def _translator(args):
    try:
        return make_translator(args.translator, dataset=getattr(args, "dataset", None),
                               endpoint_env=args.endpoint_env)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_eval(args) -> int:
    store = _load(args)
    if not Path(args.dataset).exists():
        raise UsageError(f"dataset not found: {args.dataset}")
    report = evaluate(args.dataset, _translator(args), store)
    if args.out:
        Path(args.out).write_text(report.to_jsonl(), encoding="utf-8")
    if args.format == "jsonl":
        _emit(json.dumps(report.summary(), ensure_ascii=False) + "\n")
    else:
        _emit(report.format_table())
    return 0


def cmd_chat(args) -> int:
    store = _load(args)
    repl(store, _translator(args))
    return 0


def cmd_synth(args) -> int:
    cfg = SyntheticConfig(persons=args.persons, countries=args.countries, fields=args.fields)
    text = synthetic_jsonl(_seed(args), cfg)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    return 0


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1,
                        help="upper bound on worker threads (runs are single-threaded)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="nobelgraph", description="Laureate knowledge graph toolkit.", parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, func, help, store=True):
        sp = sub.add_parser(name, help=help, parents=[common])
        sp.set_defaults(func=func)
        if store:
            sp.add_argument("--store", required=True, help="graph snapshot file")
            sp.add_argument("--schema", help="schema file overriding the bundled one")
        return sp

    def fmt(sp):
        sp.add_argument("--format", choices=("table", "jsonl"), default="table")

    def seed(sp):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default 0, with a notice)")

    def attrs(sp):
        sp.add_argument("--attributes", help=f"comma list from {', '.join(ATTRIBUTE_NAMES)}")

    sp = add("ingest", cmd_ingest, "merge a JSONL corpus into the store")
    sp.add_argument("--input", required=True)
    sp.add_argument("--strict", action="store_true", help="fail on the first rejection or identity conflict")
    sp.add_argument("--source", choices=("original", "enriched"), default="enriched")
    sp.add_argument("--report", help="also write the JSON summary here")
    fmt(sp)

    sp = add("stats", cmd_stats, "node and edge counts with growth")
    fmt(sp)

    sp = add("project", cmd_project, "export the shared-attribute projection as an edge list")
    sp.add_argument("--out")
    sp.add_argument("--largest", action="store_true", help="keep only the largest component")
    attrs(sp)

    sp = add("analyze", cmd_analyze, "small-world statistics and centrality rankings")
    sp.add_argument("--report", help="directory for analysis.txt and analysis.jsonl")
    sp.add_argument("--top", type=int, default=3)
    sp.add_argument("--damping", type=float, default=0.85)
    sp.add_argument("--c-ratio-min", type=float, default=1.2)
    sp.add_argument("--l-ratio-max", type=float, default=1.2)
    seed(sp)
    attrs(sp)
    fmt(sp)

    sp = add("communities", cmd_communities, "Louvain communities with profiles")
    sp.add_argument("--out", help="write the JSONL partition here")
    sp.add_argument("--resolution", type=float, default=1.0)
    sp.add_argument("--top", type=int, default=5)
    sp.add_argument("--all-vertices", action="store_true", help="cluster the whole projection, not just its largest component")
    seed(sp)
    attrs(sp)
    fmt(sp)

    sp = add("query", cmd_query, "run a Cypher query")
    sp.add_argument("cypher", nargs="?")
    sp.add_argument("--file")
    sp.add_argument("--repl", action="store_true")
    sp.add_argument("--explain", action="store_true", help="print the plan instead of running")
    fmt(sp)

    sp = add("generate", cmd_generate, "multiple-choice items and fine-tuning pairs")
    sp.add_argument("--mcq", help="MCQ JSONL output path")
    sp.add_argument("--counts", default="1:10,2:10,3:10,4:10")
    sp.add_argument("--finetune", help="prompt/completion JSONL output path")
    sp.add_argument("--pairs", type=int, default=1000)
    sp.add_argument("--mix", help="hop mix, default 1-2:0.6,3-4:0.4")
    seed(sp)

    for name, func, help in (("eval", cmd_eval, "score a translator on an MCQ dataset"),
                             ("chat", cmd_chat, "interactive question answering")):
        sp = add(name, func, help)
        sp.add_argument("--translator", choices=TRANSLATORS, default="template")
        sp.add_argument("--endpoint-env", default=ENDPOINT_ENV,
                        help="environment variable holding the external endpoint")
        if name == "eval":
            sp.add_argument("--dataset", required=True)
            sp.add_argument("--out", help="write summary and per-item traces as JSONL")
            fmt(sp)
        else:
            sp.add_argument("--dataset", help="gold dataset for the oracle translator")

    sp = add("synth", cmd_synth, "write a synthetic JSONL corpus", store=False)
    sp.add_argument("--out")
    sp.add_argument("--persons", type=int, default=120)
    sp.add_argument("--countries", type=int, default=40)
    sp.add_argument("--fields", type=int, default=20)
    seed(sp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            raise UsageError("nobelgraph: error: a subcommand is required")
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    except (NobelGraphError, QueryError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
