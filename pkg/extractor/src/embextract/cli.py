"""Corpus extraction CLI.

::

    embextract text   --lexicon words.csv          --model clip-b-32 -o enc/nrc
    embextract text   --lexicon builtin:group-labels --model clip-b-32 -o enc/gl
    embextract images --dir faces/ --labels faces.csv --model clip-b-32 -o enc/cfd

Text extraction expands the six sentence templates over the lexicon (6
sentences per entry); `builtin:group-labels` uses the 864 built-in
group-label phrases. Image labels come from a CSV with columns
``id[, group][, valence]`` where ids are file names inside ``--dir``.
``--valence-scale oasis-1-7`` rescales 1..7 ratings to [0, 1]. The output is
a manifest + matrix pair in the biascope corpus format.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .encoders import get_encoder, load_image
from .errors import ExtractError, PreprocessError
from .lexicon import (
    GroupLexicon,
    load_image_labels_csv,
    load_word_lexicon_csv,
)
from .templates import TemplateSpec, expand_templates
from .writer import image_item, text_item, write_corpus


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExtractError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embextract",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("text", help="expand templates over a lexicon and encode")
    p.add_argument("--lexicon", required=True,
                   help="CSV with word[,valence] columns, or builtin:group-labels")
    p.add_argument("--templates", default="default",
                   help="'default' (the six bleached templates)")
    p.add_argument("--model", required=True,
                   help="clip-b-32 | clip-l-14 | blip2 | hashed/<dim>")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--valence-scale", choices=("unit", "oasis-1-7"), default="unit")
    p.add_argument("--source-tag", default=None,
                   help="item source tag (default: nrc-vad or group-labels)")
    p.add_argument("-o", "--output", required=True, help="output corpus base path")
    p.set_defaults(func=_cmd_text)

    p = sub.add_parser("images", help="encode a labeled image directory")
    p.add_argument("--dir", required=True, help="image directory")
    p.add_argument("--labels", required=True,
                   help="CSV with id[,group][,valence] columns")
    p.add_argument("--model", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--valence-scale", choices=("unit", "oasis-1-7"), default="unit")
    p.add_argument("--source-tag", default=None,
                   help="item source tag (default: cfd or oasis)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_images)
    return parser


def _cmd_text(args) -> int:
    if args.templates != "default":
        raise ExtractError("only the default template set is supported")
    if args.lexicon == "builtin:group-labels":
        entries = list(GroupLexicon.build().entries)
        default_tag = "group-labels"
    else:
        entries = load_word_lexicon_csv(args.lexicon, args.valence_scale)
        default_tag = "nrc-vad" if any(e.valence is not None for e in entries) \
            else "group-labels"
    sentences = expand_templates(entries, TemplateSpec())
    encoder = get_encoder(args.model)
    matrix = encoder.encode_texts([s.text for s in sentences],
                                  batch_size=args.batch_size)
    source = args.source_tag or default_tag
    items = [text_item(i, s, source) for i, s in enumerate(sentences)]
    note = (f"extractor:text model={encoder.tag} dim={encoder.dim} "
            f"entries={len(entries)} sentences={len(sentences)} "
            f"preprocessing={encoder.preprocessing!r}")
    manifest, mat = write_corpus(args.output, matrix, items, source_note=note)
    print(f"wrote {manifest} and {mat} ({len(sentences)} x {encoder.dim}, "
          f"{len(entries)} lexicon entries x 6 templates)")
    return 0


def _cmd_images(args) -> int:
    labels = load_image_labels_csv(args.labels, args.valence_scale)
    root = Path(args.dir)
    images = []
    for label in labels:
        path = root / label.id
        if not path.is_file():
            raise PreprocessError(label.id, f"no such file under {root}")
        images.append(load_image(path, label.id))
    encoder = get_encoder(args.model)
    matrix = encoder.encode_images(images, batch_size=args.batch_size)
    default_tag = "cfd" if any(l.group is not None for l in labels) else "oasis"
    source = args.source_tag or default_tag
    items = [image_item(i, label, source) for i, label in enumerate(labels)]
    note = (f"extractor:images model={encoder.tag} dim={encoder.dim} "
            f"count={len(labels)} preprocessing={encoder.preprocessing!r}")
    manifest, mat = write_corpus(args.output, matrix, items, source_note=note)
    print(f"wrote {manifest} and {mat} ({len(labels)} x {encoder.dim})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
