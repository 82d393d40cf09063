#!/usr/bin/env python3
"""Regenerates data/stroke_templates.json (single-stroke digit paths, mm, y up)."""
import json
import math
import sys


def arc(cx, cy, r, a0, a1, n, ry=None):
    ry = r if ry is None else ry
    pts = []
    for k in range(n + 1):
        a = math.radians(a0 + (a1 - a0) * k / n)
        pts.append((cx + r * math.cos(a), cy + ry * math.sin(a)))
    return pts


def lemniscate(n):
    pts = []
    for k in range(n + 1):
        t = 2 * math.pi * k / n
        pts.append((60 - 20 * math.sin(2 * t), 60 + 38 * math.cos(t)))
    return pts


def dedupe(pts):
    out = []
    for p in pts:
        q = (round(p[0], 2), round(p[1], 2))
        if not out or q != out[-1]:
            out.append(q)
    return out


T = {
    0: arc(60, 60, 28, 90, 450, 24, ry=40),
    1: [(44, 84), (60, 100), (60, 20)],
    2: arc(60, 76, 25, 160, -35, 12) + [(30, 20), (92, 20)],
    3: arc(58, 80, 20, 150, -90, 12) + arc(58, 40, 20, 90, -150, 12),
    4: [(72, 20), (72, 100), (28, 46), (92, 46)],
    5: [(86, 100), (42, 100), (38, 64)] + arc(58, 44, 24, 125, -145, 14),
    6: [(82, 98), (60, 92), (44, 78), (37, 60)] + arc(59, 40, 22, 180, 540, 20),
    7: [(30, 100), (90, 100), (50, 20)],
    8: lemniscate(28),
    9: arc(60, 76, 22, 0, 360, 20) + [(82, 20)],
}

doc = {
    "pad_mm": [120, 120],
    "duration_s": 2.0,
    "templates": [{"digit": d, "points": dedupe(T[d])} for d in range(10)],
}
for t in doc["templates"]:
    for x, y in t["points"]:
        assert 0 <= x <= 120 and 0 <= y <= 120, (t["digit"], x, y)

json.dump(doc, sys.stdout, separators=(",", ":"))
sys.stdout.write("\n")
