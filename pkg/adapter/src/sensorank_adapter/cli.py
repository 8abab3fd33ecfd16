"""Command-line entry point.

    sensorank-adapter --model NAME serve
    sensorank-adapter --model NAME export --manifest FILE --out FILE.emb

Exit codes: 0 success, 2 usage error, 3 data error (manifest/images),
4 model load failure. A load failure during `serve` still emits one JSON
error object on stdout so the connected client sees a frame, not silence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .export import ExportError, export_embeddings
from .models import ModelLoadError, resolve_model
from .serve import serve

EXIT_DATA = 3
EXIT_MODEL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorank-adapter",
        description="Host a model behind the SRA/1 stdio wire protocol or "
        "batch-export manifest embeddings to EMB1.",
    )
    parser.add_argument(
        "--model", required=True,
        help="model spec: identity[:C,H,W], mlp[:C,H,W], or a registry name",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    subs.add_parser("serve", help="answer embed/jvp requests on stdio until shutdown")

    p = subs.add_parser("export", help="embed every manifest image into an EMB1 file")
    p.add_argument("--manifest", required=True, help="manifest.json path")
    p.add_argument("--out", required=True, help="output .emb path")
    p.add_argument("--root", default=None,
                   help="image directory (default: the manifest's directory)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = resolve_model(args.model)
    except ModelLoadError as exc:
        if args.command == "serve":
            print(json.dumps({"model": args.model, "error": str(exc)}), flush=True)
        print(f"sensorank-adapter: {exc}", file=sys.stderr)
        return EXIT_MODEL

    if args.command == "serve":
        return serve(model)

    try:
        n, d = export_embeddings(args.manifest, model, args.out, root=args.root)
    except (ExportError, OSError) as exc:
        print(f"sensorank-adapter: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {n} x {d} embeddings to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
