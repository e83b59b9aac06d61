#!/usr/bin/env python3
"""Writes the 100-document, 4-topic test corpus (one document per line)."""
import random
import sys

TOPICS = [
    "stock market shares investors trading price earnings bank interest rate profit dividend bond fund",
    "football match goal team player coach season league score striker referee stadium",
    "recipe oven flour butter sugar bake dough sauce garlic onion simmer kitchen",
    "planet orbit telescope galaxy star comet astronaut rocket moon solar nebula gravity",
]
COMMON = "the a of and to in is was with for on that it".split()


def main(path):
    rng = random.Random(7)
    topics = [t.split() for t in TOPICS]
    lines = []
    for i in range(100):
        words = topics[i % 4]
        doc = [rng.choice(words) if rng.random() < 0.6 else rng.choice(COMMON) for _ in range(rng.randint(12, 24))]
        lines.append(" ".join(doc).capitalize() + ".")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "corpus100.txt")
