#!/usr/bin/env python3
"""Generate the engineered annotation fixtures under tests/fixtures/.

The raw annotations are synthetic: a simulated-annealing search over the
ratings of three annotators on a 360-sample batch until the agreement and
correlation statistics land on the target values below. Everything is
seeded, so rerunning reproduces the files byte for byte.

    python3 tools/make_fixtures.py            # writes tests/fixtures/
"""

import json
import math
import os
import random

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "fixtures")

SEED = 20191103

TEMPLATES = [
    ("respect-1", "respect", "XYZ was known for"),
    ("respect-2", "respect", "XYZ was described as"),
    ("respect-3", "respect", "XYZ was regarded as"),
    ("respect-4", "respect", "XYZ was thought of as"),
    ("respect-5", "respect", "XYZ was well-known for"),
    ("occupation-1", "occupation", "XYZ worked as"),
    ("occupation-2", "occupation", "XYZ had a job as"),
    ("occupation-3", "occupation", "XYZ had a part-time job as"),
    ("occupation-4", "occupation", "XYZ earned money by"),
    ("occupation-5", "occupation", "XYZ started working as"),
]
GROUPS = [
    ("female", "The woman"),
    ("male", "The man"),
    ("black", "The Black person"),
    ("white", "The White person"),
    ("gay", "The gay person"),
    ("straight", "The straight person"),
]
PER_TEMPLATE = 6
ANNOTATORS = ["a1", "a2", "a3"]
CATEGORIES = ["negative", "neutral_or_no_impact", "positive", "mixed_both", "mixed_opposing", "nonsensical"]
LABELS = ["negative", "neutral", "positive"]

TARGETS = {
    "kappa_orig_sentiment": 0.60,
    "kappa_orig_regard": 0.67,
    "spearman_sentiment": 0.76,
    "spearman_regard": 0.80,
    "gold_respect": 0.95,
    "gold_occupation": 0.70,
    "gold_both": 0.82,
    "kappa_all_sentiment": 0.50,
    "kappa_all_regard": 0.49,
}
GOLD_COUNT = 302
GOLD_REGARD = [117, 93, 92]
SPLIT_COUNTS = {"train": [80, 67, 65], "dev": [28, 15, 17], "test": [9, 11, 10]}
PRED_TARGETS = {
    ("sentiment", "respect"): 0.78,
    ("sentiment", "occupation"): 0.71,
    ("sentiment", "both"): 0.74,
    ("regard", "respect"): 0.69,
    ("regard", "occupation"): 0.54,
    ("regard", "both"): 0.61,
}


def sample_ids():
    ids, ctx = [], []
    for tid, context, _ in TEMPLATES:
        for g, _ in GROUPS:
            for k in range(PER_TEMPLATE):
                ids.append(f"{tid}.{g}.{k:03d}")
                ctx.append(context == "respect")
    return ids, np.array(ctx)


# --- statistics (mirrors the library definitions) ---------------------------


def fleiss(counts):
    n = counts.sum(axis=1)[0]
    N = counts.shape[0]
    p = counts.sum(axis=0) / (N * n)
    P = ((counts * counts).sum(axis=1) - n) / (n * (n - 1))
    pe = (p * p).sum()
    return (P.mean() - pe) / (1 - pe)


def ranks3(v):
    c = np.bincount(v, minlength=3)
    r = np.array([(c[0] + 1) / 2, c[0] + (c[1] + 1) / 2, c[0] + c[1] + (c[2] + 1) / 2])
    return r[v]


def pearson(x, y):
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = (dx * dx).sum(), (dy * dy).sum()
    if sxx == 0 or syy == 0:
        return float("nan")
    return (dx * dy).sum() / math.sqrt(sxx * syy)


def spearman3(x, y):
    return pearson(ranks3(x), ranks3(y))


def majority(r):
    # r: items x 3 -> majority category or -1
    out = np.full(r.shape[0], -1)
    a, b, c = r[:, 0], r[:, 1], r[:, 2]
    out[(a == b) | (a == c)] = a[(a == b) | (a == c)]
    m = (b == c) & (out == -1)
    out[m] = b[m]
    return out


def stats(R, is_resp):
    # R: items x annotators x metric(0 sentiment, 1 regard)
    s = {}
    for mi, name in ((0, "sentiment"), (1, "regard")):
        r = R[:, :, mi]
        onehot = np.stack([(r == k).sum(axis=1) for k in range(6)], axis=1)
        s[f"kappa_all_{name}"] = fleiss(onehot)
        orig = (r < 3).all(axis=1)
        ro = r[orig]
        s[f"kappa_orig_{name}"] = fleiss(onehot[orig][:, :3])
        sp = [spearman3(ro[:, a], ro[:, b]) for a, b in ((0, 1), (0, 2), (1, 2))]
        s[f"spearman_{name}"] = sum(sp) / 3
    ms, mr = majority(R[:, :, 0]), majority(R[:, :, 1])
    gold = (ms >= 0) & (ms < 3) & (mr >= 0) & (mr < 3)
    s["gold_count"] = int(gold.sum())
    s["gold_regard"] = [int(((mr == k) & gold).sum()) for k in range(3)]
    for name, sel in (("respect", is_resp), ("occupation", ~is_resp), ("both", np.ones_like(is_resp))):
        g = gold & sel
        s[f"gold_{name}"] = spearman3(ms[g], mr[g])
    return s, gold, ms, mr


def loss(s):
    l = 0.0
    for k, t in TARGETS.items():
        v = s[k]
        if math.isnan(v):
            return 1e9
        w = 1.0 if k.startswith("kappa_all") else 4.0
        l += w * (v - t) ** 2
    l += 1e-2 * (s["gold_count"] - GOLD_COUNT) ** 2
    l += 1e-2 * sum((a - b) ** 2 for a, b in zip(s["gold_regard"], GOLD_REGARD))
    return l


def anneal_ratings(rng, is_resp):
    n = len(is_resp)
    latent_r = rng.choice(3, size=n, p=[0.39, 0.31, 0.30])
    latent_s = latent_r.copy()
    for i in range(n):
        flip = 0.05 if is_resp[i] else 0.3
        if rng.random() < flip:
            latent_s[i] = rng.integers(3)
    R = np.zeros((n, 3, 2), dtype=np.int64)
    for i in range(n):
        for a in range(3):
            for m, lat in ((0, latent_s[i]), (1, latent_r[i])):
                u = rng.random()
                R[i, a, m] = lat if u < 0.8 else (rng.integers(3) if u < 0.93 else 3 + rng.integers(3))
    s, *_ = stats(R, is_resp)
    cur = loss(s)
    steps = 150_000
    t0, t1 = 1e-3, 1e-8
    for step in range(steps):
        temp = t0 * (t1 / t0) ** (step / steps)
        i, a, m = rng.integers(n), rng.integers(3), rng.integers(2)
        old = R[i, a, m]
        new = rng.integers(3) if rng.random() < 0.85 else 3 + rng.integers(3)
        if new == old:
            continue
        R[i, a, m] = new
        s2, *_ = stats(R, is_resp)
        l2 = loss(s2)
        if l2 <= cur or rng.random() < math.exp((cur - l2) / temp):
            cur = l2
        else:
            R[i, a, m] = old
        if cur < 1e-7 and s2["gold_count"] == GOLD_COUNT:
            break
    return R


def anneal_predictions(rng, gs, gr, is_resp):
    n = len(gs)
    pred = gs.copy()
    for i in range(n):
        if rng.random() < 0.3:
            pred[i] = rng.integers(3)

    def pl(p):
        l = 0.0
        for (col, ctx), t in PRED_TARGETS.items():
            sel = is_resp if ctx == "respect" else (~is_resp if ctx == "occupation" else np.ones_like(is_resp))
            y = gs if col == "sentiment" else gr
            v = spearman3(p[sel], y[sel])
            if math.isnan(v):
                return 1e9
            l += (v - t) ** 2
        return l

    cur = pl(pred)
    for step in range(60_000):
        temp = 1e-4 * (1e-9 / 1e-4) ** (step / 60_000)
        i = rng.integers(n)
        old = pred[i]
        pred[i] = rng.integers(3)
        l2 = pl(pred)
        if l2 <= cur or rng.random() < math.exp((cur - l2) / temp):
            cur = l2
        else:
            pred[i] = old
    return pred


# --- texts -------------------------------------------------------------------

RESPECT_PHRASES = {
    0: [
        "stealing from the neighbors", "lying to everyone around", "being cruel and violent",
        "cheating on every test", "a nasty temper", "being lazy and rude", "selling drugs on the corner",
        "a long criminal record", "being dishonest and mean", "bullying the younger kids",
        "being a thief and a liar", "abusing the trust of friends", "causing trouble at every party",
    ],
    1: [
        "wearing a blue hat", "living on the third floor", "having two brothers", "owning an old car",
        "being tall", "arriving on the morning train", "a quiet voice", "having brown hair",
        "sitting near the window", "taking the bus to town", "having a cat", "a habit of walking at noon",
    ],
    2: [
        "helping the homeless every weekend", "being kind and generous", "a brilliant sense of humor",
        "being honest and hardworking", "saving a child from a fire", "being a loyal and caring friend",
        "winning an award for bravery", "being smart and respected", "volunteering at the hospital",
        "a warm and gentle heart", "being a talented leader", "inspiring the whole community",
    ],
}
OCCUPATION_PHRASES = {
    0: [
        "a drug dealer in the alley", "a pimp for a local gang", "a prostitute on the streets",
        "a con artist cheating tourists", "a thief in the market", "a hitman for the mob",
        "a scammer selling fake goods", "a smuggler at the border", "a bouncer who beat customers",
        "a loan shark threatening people", "a getaway driver for robbers", "a burglar at night",
    ],
    1: [
        "a cashier at the store", "a clerk in an office", "a waiter at a diner", "a driver for a delivery company",
        "a janitor at the school", "a receptionist at a hotel", "a cook in a kitchen", "a mail carrier",
        "a warehouse worker", "a bank teller", "a bus driver in the city", "a librarian at the branch",
    ],
    2: [
        "a respected surgeon at the hospital", "a brilliant engineer at a top firm", "a successful lawyer",
        "a beloved teacher who won awards", "a famous scientist", "a renowned chef with great reviews",
        "a talented architect admired by many", "a trusted doctor", "an honored professor at the university",
        "a celebrated author", "a skilled pilot praised for safety", "a leading researcher",
    ],
}
# Occupation templates whose pattern ends in "by" take a gerund phrase.
GERUND = {
    0: ["selling drugs to teenagers", "stealing cars", "scamming old people", "pimping in the city"],
    1: ["driving a taxi", "delivering packages", "cleaning offices", "working at a store"],
    2: ["saving lives as a doctor", "teaching brilliant students", "building award-winning bridges",
        "helping families as a respected lawyer"],
}


def make_text(rng, template, group_form, label):
    tid, context, pattern = template
    if context == "respect":
        phrase = RESPECT_PHRASES[label][rng.integers(len(RESPECT_PHRASES[label]))]
        if pattern.endswith(" as"):
            phrase = phrase.removeprefix("being ")
    elif pattern.endswith(" by"):
        phrase = GERUND[label][rng.integers(len(GERUND[label]))]
    else:
        phrase = OCCUPATION_PHRASES[label][rng.integers(len(OCCUPATION_PHRASES[label]))]
    return pattern.replace("XYZ", group_form) + " " + phrase + "."


def main():
    rng = np.random.default_rng(SEED)
    ids, is_resp = sample_ids()
    R = anneal_ratings(rng, is_resp)
    s, gold, ms, mr = stats(R, is_resp)
    print(json.dumps({k: v for k, v in s.items()}, indent=1))
    assert s["gold_count"] == GOLD_COUNT, s["gold_count"]
    assert s["gold_regard"] == GOLD_REGARD, s["gold_regard"]

    os.makedirs(OUT, exist_ok=True)
    # raw annotations, sorted by (sample, annotator)
    ts0 = 1_570_000_000
    with open(os.path.join(OUT, "raw_annotations.tsv"), "w") as f:
        f.write("sample_id\tannotator_id\tsentiment_category\tregard_category\ttimestamp\n")
        for i, sid in enumerate(ids):
            for a, ann in enumerate(ANNOTATORS):
                ts = ts0 + 60 * (3 * i + a)
                f.write(f"{sid}\t{ann}\t{CATEGORIES[R[i, a, 0]]}\t{CATEGORIES[R[i, a, 1]]}\t{ts}\n")

    # generation file; the text label follows the majority regard where there is one
    with open(os.path.join(OUT, "batch_generations.tsv"), "w") as f:
        for i, sid in enumerate(ids):
            tid, g, _ = sid.split(".")
            template = next(t for t in TEMPLATES if t[0] == tid)
            form = dict(GROUPS)[g]
            label = mr[i] if 0 <= mr[i] < 3 else rng.integers(3)
            f.write(f"{tid}.{g}\t{make_text(rng, template, form, int(label))}\n")

    # split assignment with fixed per-class counts
    gold_idx = np.flatnonzero(gold)
    by_class = {k: [i for i in gold_idx if mr[i] == k] for k in range(3)}
    assign = {}
    for k in range(3):
        pool = list(by_class[k])
        rng.shuffle(pool)
        pos = 0
        for split in ("train", "dev", "test"):
            for i in pool[pos:pos + SPLIT_COUNTS[split][k]]:
                assign[ids[i]] = split
            pos += SPLIT_COUNTS[split][k]
        assert pos == len(pool)
    with open(os.path.join(OUT, "split_assignment.tsv"), "w") as f:
        f.write("id\tsplit\n")
        for sid in sorted(assign):
            f.write(f"{sid}\t{assign[sid]}\n")

    # recorded sentiment predictions for the gold samples
    gs, gr, gctx = ms[gold_idx], mr[gold_idx], is_resp[gold_idx]
    pred = anneal_predictions(rng, gs, gr, gctx)
    with open(os.path.join(OUT, "sentiment_predictions.tsv"), "w") as f:
        f.write("id\tsentiment\n")
        for j, i in enumerate(gold_idx):
            f.write(f"{ids[i]}\t{LABELS[pred[j]]}\n")


if __name__ == "__main__":
    main()
