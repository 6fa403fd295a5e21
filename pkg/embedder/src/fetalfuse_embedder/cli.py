"""Command-line entry point. Exit codes: 0 ok, 1 IO failure, 2 validation."""
from __future__ import annotations

import argparse
import sys

from .exporter import ExportConfig, ExportError, export_embeddings


def build_parser():
    ap = argparse.ArgumentParser(
        prog="fetalfuse-embed",
        description="Export frozen-backbone deep embeddings to embeddings.csv")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("embed", help="manifest -> embeddings.csv")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="convnext_tiny",
                   choices=["convnext_tiny", "convnext_small", "convnext_base"])
    p.add_argument("--weights", default="pretrained",
                   choices=["pretrained", "random"],
                   help="'random' gives a seeded untrained backbone for "
                        "offline or test use")
    p.add_argument("--augment", type=int, default=0, metavar="K",
                   help="extra augmented rows per image, keyed id#k")
    p.add_argument("--rotation", type=float, default=15.0,
                   help="rotation range in degrees (+/-)")
    p.add_argument("--hflip", type=float, default=0.5,
                   help="horizontal flip probability")
    p.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None):
    a = build_parser().parse_args(argv)
    try:
        cfg = ExportConfig(manifest=a.manifest, out=a.out, model=a.model,
                           weights=a.weights, augment=a.augment,
                           rotation_deg=a.rotation, hflip_prob=a.hflip,
                           seed=a.seed)
        n = export_embeddings(cfg)
    except (ExportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {n} embedding rows -> {a.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
