# SPDX-License-Identifier: Apache-2.0
"""Convert a LinQS citation dataset (.content / .cites) into the manifest layout.

The .content file has one node per line: <id> <attr_1> ... <attr_m> <class>.
The .cites file has one directed citation per line: <cited> <citing>.
Citations whose endpoints never appear in the .content file are dropped (the
citeseer distribution contains a handful of such dangling references).

Usage:
    python3 scripts/convert_linqs.py cora.content cora.cites data/cora
"""

import argparse
import json
import sys
from pathlib import Path


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("content", type=Path, help=".content file (attributes and class labels)")
    ap.add_argument("cites", type=Path, help=".cites file (directed citation pairs)")
    ap.add_argument("out_dir", type=Path, help="output directory for the converted dataset")
    ap.add_argument(
        "--normalization",
        choices=["row-sum", "l2-row", "none"],
        default="row-sum",
        help="attribute normalization recorded in the manifest (default: row-sum)",
    )
    return ap.parse_args()


def read_content(path):
    index_of = {}
    rows = []
    class_names = []
    labels = []
    attr_dim = None
    with path.open() as f:
        for line_no, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) < 3:
                sys.exit(f"{path}:{line_no}: expected <id> <attrs...> <class>")
            node_id, attrs, cls = fields[0], fields[1:-1], fields[-1]
            if node_id in index_of:
                sys.exit(f"{path}:{line_no}: duplicate node id {node_id!r}")
            if attr_dim is None:
                attr_dim = len(attrs)
            elif len(attrs) != attr_dim:
                sys.exit(f"{path}:{line_no}: {len(attrs)} attributes, expected {attr_dim}")
            index_of[node_id] = len(rows)
            rows.append([float(a) for a in attrs])
            labels.append(cls)
            if cls not in class_names:
                class_names.append(cls)
    if not rows:
        sys.exit(f"{path}: no nodes")
    # Class ids are assigned by sorted name so they do not depend on row order.
    class_names.sort()
    class_id = {name: i for i, name in enumerate(class_names)}
    return index_of, rows, [class_id[c] for c in labels], class_names


def read_cites(path, index_of):
    edges = set()
    dropped = 0
    self_loops = 0
    with path.open() as f:
        for line_no, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 2:
                sys.exit(f"{path}:{line_no}: expected <cited> <citing>")
            a, b = fields
            if a not in index_of or b not in index_of:
                dropped += 1
                continue
            i, j = index_of[a], index_of[b]
            if i == j:
                self_loops += 1
                continue
            edges.add((min(i, j), max(i, j)))
    return sorted(edges), dropped, self_loops


def fmt(value):
    return str(int(value)) if value == int(value) else repr(value)


def main():
    args = parse_args()
    index_of, rows, labels, class_names = read_content(args.content)
    edges, dropped, self_loops = read_cites(args.cites, index_of)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    with (out / "attrs.tsv").open("w") as f:
        for row in rows:
            f.write("\t".join(fmt(v) for v in row) + "\n")
    with (out / "edges.tsv").open("w") as f:
        for i, j in edges:
            f.write(f"{i}\t{j}\n")
    with (out / "labels.txt").open("w") as f:
        for lab in labels:
            f.write(f"{lab}\n")
    with (out / "ids.tsv").open("w") as f:
        for node_id, idx in sorted(index_of.items(), key=lambda kv: kv[1]):
            f.write(f"{idx}\t{node_id}\n")
    with (out / "classes.txt").open("w") as f:
        for name in class_names:
            f.write(f"{name}\n")
    manifest = {
        "edge_file": "edges.tsv",
        "attr_file": "attrs.tsv",
        "label_file": "labels.txt",
        "normalization": args.normalization,
    }
    with (out / "manifest.json").open("w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

    print(
        f"{out}: {len(rows)} nodes, {len(rows[0])} attributes, {len(edges)} undirected edges, "
        f"{len(class_names)} classes"
    )
    if dropped or self_loops:
        print(f"  dropped {dropped} citations with unknown endpoints, {self_loops} self-citations")


if __name__ == "__main__":
    main()
