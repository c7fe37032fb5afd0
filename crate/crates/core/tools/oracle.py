#!/usr/bin/env python3
"""Independent reference values for the annotation fixtures.

Reads tests/fixtures/{raw_annotations,sentiment_predictions}.tsv, computes
agreement and correlation statistics with statsmodels and scipy, and writes
tests/fixtures/expected_stats.json. The Rust tests compare against this
file to 1e-9.
"""

import csv
import itertools
import json
import os
from collections import Counter, defaultdict

import numpy as np
from scipy.stats import spearmanr
from statsmodels.stats.inter_rater import aggregate_raters, fleiss_kappa

FIX = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "tests", "fixtures")
ORIGINAL = {"negative": -1, "neutral_or_no_impact": 0, "positive": 1}
LABEL = {"negative": -1, "neutral": 0, "positive": 1}


def read_tsv(name):
    with open(os.path.join(FIX, name), newline="") as f:
        return list(csv.DictReader(f, delimiter="\t"))


def main():
    raw = read_tsv("raw_annotations.tsv")
    by = defaultdict(dict)
    for r in raw:
        by[r["sample_id"]][r["annotator_id"]] = r
    ids = sorted(by)
    out = {}
    for metric in ("sentiment", "regard"):
        col = f"{metric}_category"
        table = [[by[i][a][col] for a in sorted(by[i])] for i in ids]
        cats = sorted({c for row in table for c in row})
        coded = np.array([[cats.index(c) for c in row] for row in table])
        counts, _ = aggregate_raters(coded, n_cat=len(cats))
        out[f"kappa_all_{metric}"] = fleiss_kappa(counts)
        orig = [row for row in table if all(c in ORIGINAL for c in row)]
        coded = np.array([[ORIGINAL[c] + 1 for c in row] for row in orig])
        counts, _ = aggregate_raters(coded, n_cat=3)
        out[f"kappa_orig_{metric}"] = fleiss_kappa(counts)
        out[f"kappa_orig_{metric}_items"] = len(orig)
        rhos = [spearmanr([r[a] for r in coded], [r[b] for r in coded])[0] for a, b in itertools.combinations(range(3), 2)]
        out[f"spearman_{metric}"] = float(np.mean(rhos))

    gold = {}
    excluded = Counter()
    for i in ids:
        maj = {}
        for metric in ("sentiment", "regard"):
            c = Counter(by[i][a][f"{metric}_category"] for a in by[i]).most_common(1)[0]
            maj[metric] = c[0] if c[1] >= 2 else None
        if None in maj.values():
            excluded["no_majority"] += 1
        elif all(v in ORIGINAL for v in maj.values()):
            gold[i] = (ORIGINAL[maj["sentiment"]], ORIGINAL[maj["regard"]])
        else:
            excluded["non_original_majority"] += 1
    out["gold_count"] = len(gold)
    out["excluded"] = dict(excluded)
    out["gold_regard_counts"] = [sum(1 for v in gold.values() if v[1] == k) for k in (-1, 0, 1)]
    out["gold_ids_sha_input"] = "\n".join(sorted(gold))

    preds = {r["id"]: LABEL[r["sentiment"]] for r in read_tsv("sentiment_predictions.tsv")}
    subsets = {
        "respect": [i for i in gold if i.startswith("respect-")],
        "occupation": [i for i in gold if i.startswith("occupation-")],
        "both": list(gold),
    }
    for name, members in subsets.items():
        s = [gold[i][0] for i in members]
        g = [gold[i][1] for i in members]
        p = [preds[i] for i in members]
        out[f"gold_{name}"] = spearmanr(s, g)[0]
        out[f"pred_vs_sentiment_{name}"] = spearmanr(p, s)[0]
        out[f"pred_vs_regard_{name}"] = spearmanr(p, g)[0]
    out = {k: (float(v) if isinstance(v, np.floating) else v) for k, v in out.items()}
    del out["gold_ids_sha_input"]
    out["gold_ids"] = sorted(gold)

    split = read_tsv("split_assignment.tsv")
    counts = {s: [0, 0, 0] for s in ("train", "dev", "test")}
    for r in split:
        counts[r["split"]][gold[r["id"]][1] + 1] += 1
    out["split_regard_counts"] = counts

    with open(os.path.join(FIX, "expected_stats.json"), "w") as f:
        json.dump(out, f, indent=1, sort_keys=True)
        f.write("\n")
    print(json.dumps({k: v for k, v in out.items() if k != "gold_ids"}, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
