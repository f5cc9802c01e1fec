"""Pattern-based seed pairs on a handful of sentences."""
from hinhyper.hearst import TermMatcher, extract_from_sentence
from hinhyper.hin import Term, Vocabulary, tokenize

words = ["classifier", "decision tree", "svm", "database", "mysql", "tree", "language", "python", "java"]
vocab = Vocabulary("keyword", tuple(Term(i, w, f"k{i}") for i, w in enumerate(words)))
matcher = TermMatcher(vocab)

sentences = [
    "We evaluate classifiers such as decision trees, SVMs and naive bayes.",
    "Such languages as Python and Java are popular.",
    "MySQL, PostgreSQL and other databases store the data.",   # list stops at the unknown PostgreSQL
    "Several methods such as tree pruning were compared.",   # "tree" does not end the slot
    "Languages, especially Python, are used here.",
]
for text in sentences:
    hits = extract_from_sentence(tokenize(text), matcher)
    found = ", ".join(f"{vocab[a].surface} > {vocab[b].surface} [{name}]" for a, b, name in hits) or "-"
    print(f"{text}\n    {found}")
