"""Command line entry point: ``polldesk {server,client,scaffold,codec}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import PolldeskError

EXIT_FAILURE = 1
EXIT_CONFIG = 2


def cmd_server(args) -> int:
    from .demo.config import ConfigError, DemoConfig
    from .demo.server import run_server

    try:
        config = DemoConfig.load(args.config, server_port=args.port)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_server(config)


def cmd_client(args) -> int:
    from .demo.config import ConfigError, DemoConfig
    from .demo.ui import run_client

    try:
        config = DemoConfig.load(args.config, server_port=args.port)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.script is None:
        return run_client(config)
    try:
        script = Path(args.script).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"cannot read script: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_client(config, script)


def cmd_scaffold(args) -> int:
    from . import scaffold

    try:
        spec = scaffold.MessageSpec(args.name, scaffold.parse_fields(args.req), scaffold.parse_fields(args.resp))
        plan = scaffold.plan(spec, args.root)
        report = scaffold.generate(plan, apply=args.apply)
    except PolldeskError as exc:
        print(f"scaffold: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"{spec.upper}_REQUEST={plan.request_code} {spec.upper}_RESPONSE={plan.response_code}")
    for line in report.lines():
        print(line)
    if report.dry_run:
        print("dry run; pass --apply to write")
    return 0


def cmd_codec_dump(args) -> int:
    from .codec import REGISTRY, FrameDecoder

    try:
        data = bytes.fromhex(args.hex) if args.hex is not None else Path(args.file).read_bytes()
    except (OSError, ValueError) as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    decoder = FrameDecoder()
    try:
        frames = decoder.feed(data)
    except PolldeskError as exc:
        print(f"bad frame: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for env in frames:
        # application codes are project-specific, so only built-ins get a name
        name = REGISTRY.name_of(env.type_code, "application")
        print(f"type={env.type_code} ({name}) key={env.message_key.hex()} payload={env.payload!r}")
    if decoder.buffered:
        print(f"incomplete trailing frame: {decoder.buffered} byte(s)", file=sys.stderr)
        return EXIT_FAILURE
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polldesk", description="Demo server and client, message scaffolder, frame inspector.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("server", help="run the demo server")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--port", type=int, help="override server_port")
    p.set_defaults(func=cmd_server)

    p = sub.add_parser("client", help="run the demo menu client")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--port", type=int, help="override server_port")
    p.add_argument("--script", help="file of menu inputs, one per line")
    p.set_defaults(func=cmd_client)

    p = sub.add_parser("scaffold", help="generate a request/response pair")
    p.add_argument("--name", required=True, help="CamelCase base name, e.g. Echo")
    p.add_argument("--req", default="", help="request fields, name:kind,...")
    p.add_argument("--resp", default="", help="response fields, name:kind,...")
    p.add_argument("--apply", action="store_true", help="write files (default is a dry run)")
    p.add_argument("--root", default=".", help="project package directory")
    p.set_defaults(func=cmd_scaffold)

    p = sub.add_parser("codec", help="inspect wire frames")
    codec_sub = p.add_subparsers(dest="codec_command", required=True)
    d = codec_sub.add_parser("dump", help="decode and print frames")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("file", nargs="?", help="file holding raw frames")
    src.add_argument("--hex", help="frames as a hex string")
    d.set_defaults(func=cmd_codec_dump)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
