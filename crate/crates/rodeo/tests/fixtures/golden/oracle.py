"""Independent reference computation for the golden fixture.

Reads targets.json and predictions.json next to this file and writes
expected.json (full precision) and report.txt (the per-class text table the
CLI must reproduce byte for byte). Run: python3 oracle.py
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import matthews_corrcoef

HERE = Path(__file__).parent
ACC_THRESHOLDS = [0.3]
MAP_THRESHOLDS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]


def load(name):
    doc = json.loads((HERE / name).read_text())
    classes = doc["classes"]
    images = {}
    for im in doc["images"]:
        images[im["image_id"]] = [
            (b["x"], b["y"], b["w"], b["h"], classes.index(b["class"]), b.get("confidence"))
            for b in im["boxes"]
        ]
    return classes, images


def corners(b):
    x, y, w, h = b[:4]
    return x - w / 2, y - h / 2, x + w / 2, y + h / 2


def iou(a, b):
    ax0, ay0, ax1, ay1 = corners(a)
    bx0, by0, bx1, by1 = corners(b)
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def giou(a, b):
    ax0, ay0, ax1, ay1 = corners(a)
    bx0, by0, bx1, by1 = corners(b)
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = a[2] * a[3] + b[2] * b[3] - inter
    hull = (max(ax1, bx1) - min(ax0, bx0)) * (max(ay1, by1) - min(ay0, by0))
    return inter / union - (hull - union) / hull


def ciou(a, b):
    inter = min(a[2], b[2]) * min(a[3], b[3])
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def agreement(pairs):
    if not pairs:
        return 0.0
    if all(t == p for t, p in pairs):
        return 1.0
    t, p = zip(*pairs)
    return max(0.0, matthews_corrcoef(t, p))


def assign(targets, preds, w_cls):
    if not targets or not preds:
        return []
    cost = np.array([[-(w_cls if t[4] == p[4] else 0.0) - giou(t, p) for p in preds] for t in targets])
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


def match(targets, preds):
    geometric = assign(targets, preds, 0.0)
    w = agreement([(targets[i][4], preds[j][4]) for i, j in geometric])
    return assign(targets, preds, w)


def harmonic(a, b, c):
    if min(a, b, c) <= 0:
        return 0.0
    return 3.0 / (1 / a + 1 / b + 1 / c)


def loc_pair(t, p):
    dx = (p[0] - t[0]) / t[2]
    dy = (p[1] - t[1]) / t[3]
    return math.exp(-math.log(2) * (dx * dx + dy * dy))


def scored(geo, cls, n_m, n_ut, n_up):
    if n_m == 0:
        return dict(rodeo=0.0, rodeo_loc=0.0, rodeo_shape=0.0, rodeo_cls=0.0)
    f = n_m / (n_m + n_ut + n_up)
    loc = f * sum(loc_pair(t, p) for t, p in geo) / len(geo)
    shape = f * sum(ciou(t, p) for t, p in geo) / len(geo)
    cls = f * cls
    return dict(rodeo=harmonic(loc, shape, cls), rodeo_loc=loc, rodeo_shape=shape, rodeo_cls=cls)


def one_vs_rest(pairs, c):
    fp = sum(1 for t, p in pairs if t != c and p == c)
    fn = sum(1 for t, p in pairs if t == c and p != c)
    if fp == 0 and fn == 0:
        return 1.0
    return max(0.0, matthews_corrcoef([t == c for t, _ in pairs], [p == c for _, p in pairs]))


def greedy(targets, preds, t):
    order = sorted(range(len(preds)), key=lambda j: (-preds[j][5], j))
    claimed = set()
    hits = {}
    for j in order:
        best, best_iou = None, -1.0
        for i, tb in enumerate(targets):
            if i in claimed or tb[4] != preds[j][4]:
                continue
            v = iou(tb, preds[j])
            if v >= t and v > best_iou:
                best, best_iou = i, v
        if best is not None:
            claimed.add(best)
        hits[j] = best is not None
    return hits, claimed


def counts(data, k, t, c):
    tp = fp = fn = tn = 0
    for targets, preds in data:
        hits, claimed = greedy(targets, preds, t)
        tc = [i for i, b in enumerate(targets) if b[4] == c]
        pc = [j for j, b in enumerate(preds) if b[4] == c]
        tp += sum(hits[j] for j in pc)
        fp += sum(not hits[j] for j in pc)
        fn += sum(i not in claimed for i in tc)
        tn += not tc and not pc
    return tp, fp, fn, tn


def ap(data, t, c):
    npos = sum(b[4] == c for targets, _ in data for b in targets)
    if npos == 0:
        return None
    levels = sorted({p[5] for _, preds in data for p in preds if p[4] == c}, reverse=True)
    points = []
    for level in levels:
        tp = fp = 0
        for targets, preds in data:
            kept = [p for p in preds if p[5] >= level]
            hits, _ = greedy(targets, kept, t)
            for j, p in enumerate(kept):
                if p[4] == c:
                    tp += hits[j]
                    fp += not hits[j]
        points.append((tp / npos, tp / (tp + fp)))
    total, prev = 0.0, 0.0
    for i, (r, _) in enumerate(points):
        total += (r - prev) * max(p for _, p in points[i:])
        prev = r
    return total


def main():
    classes, targets = load("targets.json")
    _, predictions = load("predictions.json")
    ids = list(targets)
    data = [(targets[i], predictions.get(i, [])) for i in ids]
    k = len(classes)
    matches = [match(t, p) for t, p in data]

    rows = {}
    for c in range(k):
        support = any(b[4] == c for t, p in data for b in t + p)
        pairs, geo = [], []
        n_ut = n_up = 0
        for (t, p), m in zip(data, matches):
            for i, j in m:
                pairs.append((t[i][4], p[j][4]))
                if t[i][4] == c:
                    geo.append((t[i], p[j]))
            mt = {i for i, _ in m}
            mp = {j for _, j in m}
            n_ut += sum(1 for i, b in enumerate(t) if i not in mt and b[4] == c)
            n_up += sum(1 for j, b in enumerate(p) if j not in mp and b[4] == c)
        row = scored(geo, one_vs_rest(pairs, c), len(geo), n_ut, n_up) if support else {}
        for t in ACC_THRESHOLDS:
            tp, fp, fn, tn = counts(data, k, t, c)
            row[f"acc@{round(t * 100)}"] = (tp + tn) / (tp + tn + fp + fn)
            row[f"ap@{round(t * 100)}"] = ap(data, t, c)
        per_t = [ap(data, t, c) for t in MAP_THRESHOLDS]
        row["map"] = None if any(v is None for v in per_t) else sum(per_t) / len(per_t)
        rows[classes[c]] = row

    pairs, geo = [], []
    n_m = n_ut = n_up = 0
    for (t, p), m in zip(data, matches):
        n_m += len(m)
        n_ut += len(t) - len(m)
        n_up += len(p) - len(m)
        for i, j in m:
            pairs.append((t[i][4], p[j][4]))
            geo.append((t[i], p[j]))
    total = scored(geo, agreement(pairs), n_m, n_ut, n_up)

    def class_mean(values):
        present = [v for v in values if v is not None]
        return sum(present) / len(present) if present else 0.0

    for t in ACC_THRESHOLDS:
        sums = [counts(data, k, t, c) for c in range(k)]
        tp, fp, fn, tn = (sum(s[i] for s in sums) for i in range(4))
        total[f"acc@{round(t * 100)}"] = (tp + tn) / (tp + tn + fp + fn)
        total[f"ap@{round(t * 100)}"] = class_mean([ap(data, t, c) for c in range(k)])
    total["map"] = sum(class_mean([ap(data, t, c) for c in range(k)]) for t in MAP_THRESHOLDS) / len(MAP_THRESHOLDS)
    rows["Total"] = total

    expected = {f"{name}/{m}": v for name, row in rows.items() for m, v in row.items() if v is not None}
    (HERE / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")

    columns = [("RoDeO", "rodeo"), ("loc", "rodeo_loc"), ("shape", "rodeo_shape"), ("cls", "rodeo_cls")]
    for t in ACC_THRESHOLDS:
        columns.append((f"acc@{round(t * 100)}", f"acc@{round(t * 100)}"))
    for t in ACC_THRESHOLDS:
        columns.append((f"AP@{round(t * 100)}", f"ap@{round(t * 100)}"))
    columns.append(("mAP", "map"))
    name_width = max(len(n) for n in ["class", *rows])
    widths = [max(len(h), 6) for h, _ in columns]
    lines = ["class".ljust(name_width) + "".join("  " + h.rjust(w) for (h, _), w in zip(columns, widths))]
    for name, row in rows.items():
        cells = []
        for (_, key), w in zip(columns, widths):
            v = row.get(key)
            cells.append("  " + ("-" if v is None else f"{v:.4f}").rjust(w))
        lines.append(name.ljust(name_width) + "".join(cells))
    (HERE / "report.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
