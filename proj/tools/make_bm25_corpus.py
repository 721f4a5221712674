#!/usr/bin/env python3
"""Writes samples/corpus_1000.jsonl: 1000 templated instructions paired with the graphs of samples/corpus.jsonl."""

import json
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent

SHAPES = ["table", "chair", "stool", "lamp", "shelf", "bench", "desk", "cabinet", "bed", "sofa", "vase", "bookcase"]
ADJECTIVES = ["round", "square", "tall", "short", "wide", "narrow", "wooden", "metal", "glass", "small", "large",
              "low", "modern", "rustic", "thin", "thick", "red", "white", "black", "oak"]
PARTS = ["legs", "arms", "back", "drawer", "shade", "wheels", "top", "base", "seat", "shelves", "cushion", "frame"]
COUNTS = ["one", "two", "three", "four", "five", "six"]
TEMPLATES = [
    "A {adj} {shape}.",
    "A {adj} {shape} with {count} {part}.",
    "Make a {adj} {adj2} {shape}.",
    "{shape} with a {adj} {part} and {count} {part2}",
    "Generate a {shape} that has {adj} {part}, {count} {part2} and a {adj2} {part3}.",
    "A {adj} {shape}, {adj2} {part}; no {part2}.",
    "Design a {adj} {shape} for the office with {count} {part}.",
]


def main() -> None:
    rng = random.Random(1000)
    base = [json.loads(l) for l in (ROOT / "samples" / "corpus.jsonl").read_text().splitlines() if l.strip()]
    out = []
    for i in range(1000):
        words = {
            "adj": rng.choice(ADJECTIVES), "adj2": rng.choice(ADJECTIVES), "shape": rng.choice(SHAPES),
            "part": rng.choice(PARTS), "part2": rng.choice(PARTS), "part3": rng.choice(PARTS),
            "count": rng.choice(COUNTS),
        }
        text = rng.choice(TEMPLATES).format(**words)
        if rng.random() < 0.2:
            text = text.upper() if rng.random() < 0.5 else text.capitalize()
        src = base[i % len(base)]
        out.append({"id": f"bm25_{i:04d}", "instruction": text,
                    "detail_level": "long" if len(text) > 50 else "short", "pcg": src["pcg"]})
    path = ROOT / "samples" / "corpus_1000.jsonl"
    path.write_text("".join(json.dumps(o) + "\n" for o in out))
    print(f"wrote {len(out)} pairs to {path}")


if __name__ == "__main__":
    main()
