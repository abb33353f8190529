"""Command line interface.

Every command works on a snapshot file; mutating commands rewrite it
atomically, read-only commands never touch it.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from importlib import resources
from pathlib import Path

from .backends import make_backends
from .config import ABLATIONS, PRESETS, ConfigError, EngineConfig
from .engine import MemoryEngine
from .eval import DatasetError, parse_date, run_ablation_sweep
from .export import heatmap_csv, summary, to_dot
from .graph import associative_strength, detect_hubs
from .persistence import EventLog, SnapshotError, load_snapshot, save_snapshot
from .types import ConversationTurn

log = logging.getLogger("hebbmem")


class CLIError(Exception):
    pass


def bundled_fixture() -> Path:
    return Path(str(resources.files("hebbmem").joinpath("data", "synthetic_locomo.json")))


def load_config(spec: str | None) -> EngineConfig:
    if spec is None:
        return EngineConfig()
    if spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read config {spec}: {exc}") from exc
    try:
        return EngineConfig.from_dict(data).validated()
    except (ConfigError, TypeError) as exc:
        raise CLIError(f"invalid config {spec}: {exc}") from exc


def _parse_now(raw: str | None, engine: MemoryEngine) -> datetime:
    if raw:
        try:
            return parse_date(raw)
        except DatasetError as exc:
            raise CLIError(str(exc)) from exc
    return engine.latest_time() or datetime.now().replace(microsecond=0)


def _open(args, *, backends: bool = True) -> MemoryEngine:
    path = Path(args.snapshot)
    if not path.exists():
        raise CLIError(f"snapshot {path} does not exist")
    engine = load_snapshot(path)
    if backends:
        engine.embedder, engine.chat = make_backends(args.stub_backends, dim=engine.dim, seed=args.seed)
    return engine


def _save(engine: MemoryEngine, args, kind: str, **payload) -> None:
    """Write the snapshot, then journal what changed next to it."""
    save_snapshot(engine, args.snapshot)
    EventLog.beside(args.snapshot).append(kind, step=engine.graph.step, **payload)


def _consolidation_payload(events) -> list[dict]:
    return [{"hub": ev.hub_id, "cluster": ev.cluster, "records": ev.record_ids} for ev in events]


def read_transcript(path: Path, session_override: str | None) -> list[ConversationTurn]:
    """JSON-lines transcript: ``{"speaker", "timestamp", "text"}`` plus optional ``session_id``/``turn_id``."""
    turns = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CLIError(f"cannot read transcript {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            obj = json.loads(line)
            turns.append(
                ConversationTurn(
                    session_id=session_override or str(obj.get("session_id", "default")),
                    turn_id=str(obj.get("turn_id", lineno)),
                    speaker=str(obj["speaker"]),
                    text=str(obj["text"]),
                    timestamp=parse_date(obj["timestamp"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError, DatasetError) as exc:
            raise CLIError(f"{path}:{lineno}: bad transcript line: {exc}") from exc
    return turns


def cmd_ingest(args) -> int:
    path = Path(args.snapshot)
    turns = read_transcript(Path(args.input), args.session_id)
    if path.exists():
        engine = _open(args)
    else:
        engine = MemoryEngine(load_config(args.config))
        engine.embedder, engine.chat = make_backends(args.stub_backends, dim=engine.dim, seed=args.seed)
    ids = engine.ingest_many(turns)
    _save(engine, args, "ingest", nodes=ids)
    print(f"ingested {len(ids)} turns; graph has {len(engine.graph.nodes)} nodes, {len(engine.graph.edges)} edges")
    return 0


def cmd_ask(args) -> int:
    engine = _open(args)
    now = _parse_now(args.now, engine)
    n_events, before = len(engine.events), set(engine.graph.nodes)
    ans = engine.answer(args.question, now)
    print(ans.text)
    print()
    print(f"{'node':>6} {'path':<5} {'base':>9} {'augmented':>10}  text")
    for r in ans.retrieval.episodic:
        text = engine.graph.nodes[r.node_id].text if r.node_id in engine.graph.nodes else "(forgotten)"
        print(f"{r.node_id:>6} {r.path:<5} {r.base_score:>9.4f} {r.augmented_score:>10.4f}  {text[:70]}")
    for h in ans.retrieval.semantic:
        print(f"  semantic #{h.record_id} ({h.similarity:.4f}): {engine.semantic[h.record_id].statement[:70]}")
    print(f"context tokens: {ans.context_tokens}")
    _save(
        engine,
        args,
        "retrieve",
        query=args.question,
        now=now,
        nodes=ans.retrieval.node_ids,
        consolidated=_consolidation_payload(engine.events[n_events:]),
        forgotten=sorted(before - set(engine.graph.nodes)),
    )
    return 0


def cmd_stats(args) -> int:
    s = summary(_open(args, backends=False))
    print(f"nodes: {s['nodes']}  edges: {s['edges']}  step: {s['step']}")
    print(f"semantic records: {s['semantic_records']}  consolidation events: {s['consolidation_events']}")
    if s["weights"]:
        print("edge weights: " + "  ".join(f"{k}={v:.4f}" for k, v in s["weights"].items()))
    print(f"hubs ({len(s['hubs'])}): " + ", ".join(f"{h['id']} (D={h['strength']:.3f})" for h in s["hubs"]))
    return 0


def cmd_hubs(args) -> int:
    engine = _open(args, backends=False)
    g, cfg = engine.graph, engine.config
    print(f"{'node':>6} {'strength':>10} {'degree':>7}  text")
    for h in detect_hubs(g, g.step, cfg):
        print(f"{h:>6} {associative_strength(g, h, g.step, cfg):>10.4f} {g.degree(h):>7}  {g.nodes[h].text[:60]}")
    return 0


def cmd_consolidate(args) -> int:
    engine = _open(args)
    events = engine.run_reflection(_parse_now(args.now, engine))
    for ev in events:
        print(f"hub {ev.hub_id}: cluster {ev.cluster} -> records {ev.record_ids}")
    print(f"{len(events)} consolidation events")
    _save(engine, args, "consolidate", consolidated=_consolidation_payload(events))
    return 0


def cmd_forget(args) -> int:
    engine = _open(args)
    removed = engine.run_forgetting(_parse_now(args.now, engine))
    print(f"removed {len(removed)} nodes: {removed}")
    _save(engine, args, "forget", forgotten=removed)
    return 0


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}") from exc


def cmd_export_dot(args) -> int:
    engine = _open(args, backends=False)
    _write(args.out, to_dot(engine, _parse_now(args.now, engine)))
    return 0


def cmd_export_heatmap(args) -> int:
    _write(args.out, heatmap_csv(_open(args, backends=False), args.first))
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    names = list(ABLATIONS) if args.ablation == "all" else [args.ablation]
    dataset = Path(args.dataset) if args.dataset else bundled_fixture()

    def factory():
        return make_backends(args.stub_backends, dim=config.embedding_dim, seed=args.seed)

    try:
        reports = run_ablation_sweep(dataset, config, factory, names)
    except DatasetError as exc:
        raise CLIError(str(exc)) from exc
    for report in reports:
        sys.stdout.write(report.format())
    if args.rows:
        _write(args.rows, "".join(r.rows_jsonl() for r in reports))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--stub-backends", action="store_true", help="use deterministic offline backends")
    common.add_argument("--seed", type=int, default=0, help="seed for stub embeddings")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hebbmem", description="Hebbian associative memory engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, snapshot=True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if snapshot:
            p.add_argument("--snapshot", required=True)
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "append transcript turns to a snapshot")
    p.add_argument("--input", required=True, help="JSON-lines transcript")
    p.add_argument("--session-id", default=None)
    p.add_argument("--config", default=None, help="preset name or JSON file, used when creating a snapshot")

    p = add("ask", cmd_ask, "retrieve and answer a question")
    p.add_argument("--question", required=True)
    p.add_argument("--now", default=None, help="query time; defaults to the latest turn")

    add("stats", cmd_stats, "graph summary")
    add("hubs", cmd_hubs, "nodes above the hub threshold")
    p = add("consolidate", cmd_consolidate, "run one reflection pass")
    p.add_argument("--now", default=None)
    p = add("forget", cmd_forget, "run one forgetting pass")
    p.add_argument("--now", default=None)

    p = add("export-dot", cmd_export_dot, "graph as Graphviz DOT")
    p.add_argument("--out", required=True)
    p.add_argument("--now", default=None)
    p = add("export-heatmap", cmd_export_heatmap, "pairwise edge weights as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--first", type=int, default=20)

    p = add("eval", cmd_eval, "LoCoMo-style evaluation", snapshot=False)
    p.add_argument("--dataset", default=None, help="LoCoMo JSON; defaults to the bundled synthetic fixture")
    p.add_argument("--config", default=None, help="preset name or JSON file")
    p.add_argument("--ablation", default="full", choices=[*ABLATIONS, "all"])
    p.add_argument("--rows", default=None, help="write per-item rows as JSON lines")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CLIError, SnapshotError, ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # backend failures and the like
        log.debug("command failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
