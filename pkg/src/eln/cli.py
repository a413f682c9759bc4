"""Command line front end: every engine function without the browser.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from datetime import datetime
from pathlib import Path

from . import api, serialize
from .catalog import EntryFilter, PathRule
from .config import load_config, write_starter_config
from .engine import Engine
from .errors import ElnError
from .stamper import hash_file, proof_from_dict, verify


def _iso(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO-8601 timestamp: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eln", description="Lab notebook engine: ingest, query, link, plot, stamp."
    )
    parser.add_argument("--config", metavar="PATH", default=None, help="config file (default ./eln.toml)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("init", help="write a starter config and create the store")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--bind", default=None)

    p = sub.add_parser("ingest", help="scan the data tree and generate entries")
    p.add_argument("--root", default=None, help="override the configured data root")
    p.add_argument("--now", type=_iso, default=None, help="reference time for the recency rule")
    p.add_argument("--no-recency", action="store_true", help="ingest regardless of file age")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("report", help="show the most recent ingest report")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("sample", help="manage samples")
    sample_sub = p.add_subparsers(dest="sample_command", required=True)
    p = sample_sub.add_parser("add", help="register a sample")
    p.add_argument("name")
    p.add_argument("--kind", default="")

    p = sub.add_parser("rule", help="manage path rules")
    rule_sub = p.add_subparsers(dest="rule_command", required=True)
    p = rule_sub.add_parser("add", help="register a device folder rule")
    p.add_argument("code", help="three-capital-letter device code")
    p.add_argument("--root", required=True, metavar="SUBPATH", help="device folder below the data root")
    p.add_argument("--ext", required=True, help="comma-separated allowed extensions, e.g. png,csv")
    p.add_argument("--tree", choices=("main", "sub"), default=None, help="tree kind (default: inferred from SUBPATH)")
    p.add_argument("--variant", default="", help="instrument variant tokens")

    p = sub.add_parser("query", help="list catalog entries")
    p.add_argument("--sample", default=None)
    p.add_argument("--device", default=None)
    p.add_argument("--kind", choices=("main", "sub"), default=None)
    p.add_argument("--from", dest="from_", type=_iso, default=None, metavar="ISO")
    p.add_argument("--to", type=_iso, default=None, metavar="ISO")
    p.add_argument("--q", default=None, help="substring over descriptions and note bodies")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("stamp", help="tamper-evidence operations")
    stamp_sub = p.add_subparsers(dest="stamp_command", required=True)
    p = stamp_sub.add_parser("run", help="batch and anchor all unstamped entries")
    p.add_argument("--now", type=_iso, default=None)
    p.add_argument("--json", action="store_true")
    p = stamp_sub.add_parser("verify", help="check a file against an inclusion proof")
    p.add_argument("file")
    p.add_argument("proof", metavar="PROOF.json")

    return parser


def _print_report(report: dict, as_json: bool) -> None:
    if as_json:
        print(serialize.dumps(report))
        return
    print(
        f"scanned {report['scanned']}, created {report['created']},"
        f" duplicates {report['duplicates']}, skipped {len(report['skipped'])},"
        f" links {report['links_created']}"
    )
    for skip in report["skipped"]:
        print(f"  skipped {skip['path']}  [{skip['reason']}]")


def _cmd_init(config_path: str | None) -> int:
    target = Path(config_path) if config_path else Path("eln.toml")
    write_starter_config(target)
    config = load_config(target)
    Path(config.data_root).mkdir(parents=True, exist_ok=True)
    Engine(config).close()  # creates the store file and schema
    print(f"wrote {target}")
    print(f"store at {config.store_path}, data root at {config.data_root}")
    return 0


def _cmd_ingest(engine: Engine, args: argparse.Namespace) -> int:
    report = engine.ingest_run(
        now=args.now, recency_enabled=False if args.no_recency else None
    )
    _print_report(report, args.json)
    return 0


def _cmd_query(engine: Engine, args: argparse.Namespace) -> int:
    time_range = None
    if args.from_ is not None or args.to is not None:
        time_range = (args.from_ or datetime.min, args.to or datetime.max)
    entries = engine.query(
        EntryFilter(
            sample=args.sample,
            device=args.device,
            kind=args.kind,
            time_range=time_range,
            text=args.q,
        )
    )
    if args.json:
        print(serialize.dumps([serialize.entry_to_dict(e) for e in entries]))
    else:
        for e in entries:
            print(f"{e.id}\t{e.observed_at.isoformat()}\t{e.kind}\t{e.device_code}\t{e.sample_name}\t{e.description}")
    return 0


def _cmd_stamp_run(engine: Engine, args: argparse.Namespace) -> int:
    batch = engine.stamp_run(now=args.now)
    if args.json:
        payload = {"status": "nothing_to_stamp"} if batch is None else serialize.batch_to_dict(batch)
        print(serialize.dumps(payload))
        return 0
    if batch is None:
        print("nothing to stamp")
    else:
        state = "anchored" if batch.submitted_at else "pending"
        print(f"stamped {len(batch.leaves)} digests, root {batch.root.hex()} ({state})")
    return 0


def _cmd_stamp_verify(args: argparse.Namespace) -> int:
    digest = hash_file(args.file)
    with open(args.proof, "r", encoding="utf-8") as fh:
        proof = proof_from_dict(json.load(fh))
    if proof.leaf != digest:
        print(f"FAILED: file hash {digest.hex()} is not the proof's leaf", file=sys.stderr)
        return 1
    if not verify(proof):
        print("FAILED: proof does not reproduce its root", file=sys.stderr)
        return 1
    print("OK")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "init":
            return _cmd_init(args.config)
        if args.command == "stamp" and args.stamp_command == "verify":
            return _cmd_stamp_verify(args)  # pure arithmetic; no store needed

        config = load_config(args.config)

        if args.command == "serve":
            api.serve(Engine(config), bind=args.bind, port=args.port)
            return 0

        if args.command == "ingest" and args.root is not None:
            config = dataclasses.replace(config, data_root=Path(args.root))

        engine = Engine(config)
        try:
            if args.command == "ingest":
                return _cmd_ingest(engine, args)
            if args.command == "report":
                _print_report(engine.latest_report(), args.json)
                return 0
            if args.command == "sample":
                sample = engine.add_sample(args.name, kind=args.kind)
                print(f"registered sample {sample.name}")
                return 0
            if args.command == "rule":
                tree = args.tree or (
                    "sub" if args.root.replace("\\", "/").lstrip("/").startswith(config.grammar.sub_root) else "main"
                )
                rules = engine.add_rule(
                    PathRule(
                        device_code=args.code,
                        tree_kind=tree,
                        root_subpath=args.root,
                        allowed_extensions=tuple(args.ext.split(",")),
                        instrument_variant=args.variant,
                    )
                )
                print(f"registered rule {args.code} ({tree}) -> {args.root}; {len(rules)} rule(s) total")
                return 0
            if args.command == "query":
                return _cmd_query(engine, args)
            if args.command == "stamp" and args.stamp_command == "run":
                return _cmd_stamp_run(engine, args)
        finally:
            engine.close()

        raise AssertionError(f"unhandled command {args.command}")
    except ElnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
