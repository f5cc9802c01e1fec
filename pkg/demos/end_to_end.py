"""Synthetic dataset through every pipeline stage, then a look at the output.

Equivalent shell session:

    hinhyper synth --out work
    hinhyper run --config work/pipeline.json
"""
import json
import sys
import tempfile
from pathlib import Path

from hinhyper.cli import main

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="hinhyper-"))
main(["synth", "--out", str(work), "--seed", "3"])
main(["run", "--config", str(work / "pipeline.json")])
main(["run", "--config", str(work / "pipeline.json")])   # second call: every stage is up to date

out = work / "out"
print("\nmetrics:", json.dumps(json.loads((out / "metrics.json").read_text()), indent=1))

labels = {tuple(line.split("\t")[:2]): line.rstrip().endswith("1")
          for line in (work / "labels.tsv").read_text().splitlines()}
print("\ntop ranked pairs (hypernym > hyponym, score, true?):")
for line in (out / "ranked.tsv").read_text().splitlines()[:10]:
    a, b, s = line.split("\t")
    print(f"  {a} > {b}  {float(s):.3f}  {labels.get((a, b))}")

tax = json.loads((out / "taxonomy.json").read_text())
removed = (out / "removed_edges.tsv").read_text().splitlines()
print(f"\ntaxonomy: {len(tax['nodes'])} nodes, {len(tax['edges'])} edges, {len(removed)} removed to break cycles")
print(f"artifacts in {out}")
