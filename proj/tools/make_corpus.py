#!/usr/bin/env python3
"""Writes a synthetic English-like corpus, one sentence per line.

The sentences come from a small phrase grammar, so lengths spread from a
few words to well past 224 characters. Output is fixed by --seed.
"""

import argparse
import random

SUBJECTS = [
    "the old farmer", "a young teacher", "the city council", "my neighbour", "the small company",
    "a tired engineer", "the local school", "her brother", "the market vendor", "a quiet student",
    "the river boat", "our manager", "the museum guide", "a travelling nurse", "the village baker",
    "the research team", "his grandmother", "a new driver", "the harbour master", "the night guard",
]
VERBS = [
    "repaired", "visited", "painted", "sold", "described", "carried", "measured", "opened",
    "borrowed", "cleaned", "watched", "counted", "ordered", "found", "moved", "checked",
    "built", "closed", "lent", "planted",
]
OBJECTS = [
    "the wooden fence", "a heavy box", "the broken radio", "three baskets of apples", "the red bicycle",
    "an old map", "the kitchen window", "a stack of letters", "the garden gate", "two loaves of bread",
    "the long bridge", "a paper lantern", "the spare tyre", "the front door", "a bag of flour",
    "the iron kettle", "a pair of boots", "the school bus", "the tall ladder", "a jar of honey",
]
PLACES = [
    "near the station", "behind the church", "in the morning", "after the storm", "before lunch",
    "at the edge of town", "on the north road", "during the festival", "by the canal", "in the spring",
    "under the bridge", "across the valley", "at the weekend", "inside the warehouse", "along the coast",
]
ADVERBS = ["slowly", "carefully", "quickly", "quietly", "gladly", "again", "early", "happily"]
RELATIVES = [
    "who lived next door", "that nobody wanted", "which had been left outside", "who knew the way",
    "that stood by the road", "which the children liked", "who worked late", "that came from the north",
]
LINKS = ["and", "but", "so", "while", "because", "although", "until", "after"]
OPENERS = ["", "", "", "yesterday", "last year", "in the end", "as usual", "for a while", "once again"]


def noun_phrase(rng, pool):
    phrase = rng.choice(pool)
    if rng.random() < 0.25:
        phrase += " " + rng.choice(RELATIVES)
    return phrase


def clause(rng):
    words = [noun_phrase(rng, SUBJECTS)]
    if rng.random() < 0.3:
        words.append(rng.choice(ADVERBS))
    words.append(rng.choice(VERBS))
    words.append(noun_phrase(rng, OBJECTS))
    if rng.random() < 0.6:
        words.append(rng.choice(PLACES))
    return " ".join(words)


def sentence(rng):
    n = rng.choices([1, 2, 3, 4, 5], weights=[3, 5, 4, 3, 2])[0]
    parts = [clause(rng)]
    for _ in range(n - 1):
        parts.append(rng.choice(LINKS) + " " + clause(rng))
    opener = rng.choice(OPENERS)
    text = (opener + " " if opener else "") + " ".join(parts)
    return text[0].upper() + text[1:] + "."


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--sentences", type=int, default=6000)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        for _ in range(args.sentences):
            f.write(sentence(rng) + "\n")


if __name__ == "__main__":
    main()
