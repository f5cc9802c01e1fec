"""Loader for the 30-sentence pattern fixture in data/hearst_fixture.json."""
import json
from pathlib import Path

from hinhyper.hin import Corpus, Document, HinGraph, Schema, target_vocabulary, tokenize

PATH = Path(__file__).parent / "data" / "hearst_fixture.json"


def load():
    doc = json.loads(PATH.read_text())
    schema = Schema(("keyword", "paper"), {"tagged": ("paper", "keyword")})
    nodes = [(f"k{i}", "keyword", s) for i, s in enumerate(doc["vocabulary"])]
    nodes += [(f"p{i}", "paper") for i in range(len(doc["sentences"]))]
    graph = HinGraph.build(schema, nodes, [])
    vocab = target_vocabulary(graph, "keyword")
    corpus = Corpus(tuple(Document(f"p{i}", (tuple(tokenize(text)),))
                          for i, (text, _) in enumerate(doc["sentences"])))
    return doc, vocab, corpus
