#!/usr/bin/env python3
"""Regenerates the synthetic fixtures in this directory (deterministic)."""
import random

rng = random.Random(20201016)

SUBJECTS = ["the plaintiff", "the defendant", "the court", "the appellant", "the tenant",
            "the landlord", "the guardian", "the trustee", "the lessee", "the jury"]
VERBS = ["may rescind", "shall reimburse", "did not renounce", "sought to revoke",
         "failed to construe", "moved to depose", "alleged a tort against",
         "claimed an infringement by", "filed a demurrer against", "proved malfeasance by"]
OBJECTS = ["the contract", "the lease", "the agreement", "the estate", "the trust",
           "the guardianship", "the deed", "the judgment", "the statute", "the covenant"]
TAILS = ["after the contravention.", "under the statute.", "without notice.",
         "for the misdemeanor.", "before the hearing.", "as a tortious act.",
         "in the rescission claim.", "with costs.", "on appeal.", "by written consent."]


def sentence():
    return " ".join([rng.choice(SUBJECTS), rng.choice(VERBS), rng.choice(OBJECTS),
                     rng.choice(TAILS)]).capitalize()


with open("corpus_200.txt", "w") as f:
    for d in range(40):
        if d:
            f.write("\n")
        for _ in range(5):
            f.write(sentence() + "\n")

YES = ["valid", "binding", "permitted", "enforceable"]
NO = ["void", "barred", "prohibited", "rescinded"]
FILLER = ["the contract", "a lease", "this agreement", "the deed", "such a claim",
          "the covenant", "that transfer", "the gift"]


def statement(yes):
    key = rng.choice(YES if yes else NO)
    return f"{rng.choice(FILLER)} is {key} under {rng.choice(FILLER)}"


with open("labeled_100.tsv", "w") as f:
    for _ in range(100):
        yes = rng.random() < 0.5
        f.write(("Y" if yes else "N") + "\t" + statement(yes) + "\n")

with open("test_112.tsv", "w") as f:
    for _ in range(112):
        yes = rng.random() < 0.5
        f.write(("Y" if yes else "N") + "\t" + statement(yes) + "\n")
