#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Generates the committed 5-sample fixture under tests/fixtures/fixture5.

The fixture stands in for extractor output: CLIP patch grids, four
geometric encoder stages, template/plain text embedding banks, reasoning
records and reasoning embeddings, plus uint16 ground-truth masks. It is
deterministic (fixed seed) and only needs numpy.

    python3 tests/fixtures/make_fixture.py
"""
import json
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent / "fixture5"
SEED = 20251016

CATEGORIES = ["Background", "OcellarisClownfish", "Turtle", "SeaUrchin", "Diver", "PlasticBag", "Koi", "BrainCoral"]
SPLITS = {
    "taxonomy": {
        "ArtificialObjects": [5],
        "Fish": [1, 6],
        "Invertebrates": [3],
        "Humans&LargeMammals": [4],
        "UnderwaterPlants&Corals": [7],
        "OtherVertebrates": [2],
    },
    "commonness": {"Common": [1, 2, 4, 5], "General": [3, 7], "Special": [6]},
}
CHANNELS = 16
TEMPLATES = 4
GEO_CHANNELS = 6
CLIP_GRID = (5, 6)
GEO_GRIDS = [(10, 12), (10, 12), (8, 9), (7, 8)]
IMAGE = (20, 24)
IGNORE = 255


def unit(v):
    return v / np.linalg.norm(v)


def make_gt(rng):
    h, w = IMAGE
    gt = np.zeros((h, w), dtype=np.uint16)
    classes = rng.choice(np.arange(1, len(CATEGORIES)), size=3, replace=False)
    yy, xx = np.mgrid[0:h, 0:w]
    for c in classes:
        cy, cx = rng.uniform(3, h - 3), rng.uniform(3, w - 3)
        ry, rx = rng.uniform(3, 7), rng.uniform(3, 8)
        d = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
        gt[d <= 1.0] = c
        # thin ignore rim around each blob
        gt[(d > 1.0) & (d <= 1.15)] = IGNORE
    return gt


def cell_labels(gt, grid):
    gh, gw = grid
    h, w = gt.shape
    out = np.zeros(grid, dtype=np.int64)
    for y in range(gh):
        for x in range(gw):
            py = min(h - 1, int(round(y * (h - 1) / max(gh - 1, 1))))
            px = min(w - 1, int(round(x * (w - 1) / max(gw - 1, 1))))
            v = int(gt[py, px])
            out[y, x] = 0 if v == IGNORE else v
    return out


def save(path, array):
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, array)


def main():
    rng = np.random.default_rng(SEED)
    k = len(CATEGORIES)
    prototypes = np.stack([unit(rng.normal(size=CHANNELS)) for _ in range(k)])

    text = prototypes[:, None, :] + 0.3 * rng.normal(size=(k, TEMPLATES, CHANNELS))
    plain = prototypes[:, None, :] + 0.45 * rng.normal(size=(k, 1, CHANNELS))
    save(ROOT / "text_embeddings.npy", text.astype(np.float32))
    save(ROOT / "plain_text_embeddings.npy", plain.astype(np.float32))

    samples = []
    for i in range(5):
        sid = f"sample_{i}"
        gt = make_gt(rng)
        save(ROOT / sid / "gt.npy", gt)

        labels = cell_labels(gt, CLIP_GRID)
        clip = prototypes[labels] * rng.uniform(0.5, 2.0) + 0.55 * rng.normal(size=(*CLIP_GRID, CHANNELS))
        save(ROOT / sid / "clip.npy", clip.astype(np.float32))

        region = rng.normal(size=(k, GEO_CHANNELS)) + 1.0
        geo_paths = []
        for stage, grid in enumerate(GEO_GRIDS):
            gl = cell_labels(gt, grid)
            geo = region[gl] + (0.2 + 0.1 * stage) * rng.normal(size=(*grid, GEO_CHANNELS))
            p = ROOT / sid / f"geo_stage{stage}.npy"
            save(p, geo.astype(np.float32))
            geo_paths.append(f"{sid}/geo_stage{stage}.npy")

        entry = {
            "sample_id": sid,
            "image_height": IMAGE[0],
            "image_width": IMAGE[1],
            "clip_features": f"{sid}/clip.npy",
            "geo_features": geo_paths,
            "gt": f"{sid}/gt.npy",
        }
        present = [int(c) for c in np.unique(gt) if c not in (0, IGNORE)]
        if i < 3:
            obj = CATEGORIES[present[0]]
            record = {
                "Caption": f"A {obj} near the reef.",
                "Objects": [obj],
                "Attributes": {obj: ["colorful", "small"]},
            }
            reasoning = unit(prototypes[present[0]] + 0.3 * rng.normal(size=CHANNELS)) * 3.0
        elif i == 3:
            record = {
                "Caption": "A group of zebrafish swimming in clear water.",
                "Objects": ["Zebrafish"],
                "Attributes": {"Zebrafish": ["silver", "striped", "small"]},
            }
            reasoning = rng.normal(size=CHANNELS)
        else:
            record = None
        if record is not None:
            (ROOT / sid / "reasoning.json").write_text(json.dumps(record, indent=2) + "\n")
            save(ROOT / sid / "reasoning_embedding.npy", reasoning[None, :].astype(np.float32))
            entry["reasoning"] = f"{sid}/reasoning.json"
            entry["reasoning_embedding"] = f"{sid}/reasoning_embedding.npy"
        else:
            # unparseable record: exercised as the template-only fallback
            (ROOT / sid / "reasoning.json").write_text('{"Caption": "truncated output", "Objects": [\n')
            entry["reasoning"] = f"{sid}/reasoning.json"
        samples.append(entry)

    manifest = {
        "version": 1,
        "categories": CATEGORIES,
        "splits": SPLITS,
        "text_embeddings": "text_embeddings.npy",
        "plain_text_embeddings": "plain_text_embeddings.npy",
        "samples": samples,
    }
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
