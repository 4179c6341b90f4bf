"""Regenerate phantom_oracle.json with the naive reference operators.

Run from the repository root::

    python tests/fixtures/make_phantom_oracle.py

Slow (pure-Python pipeline over 20 full-size phantoms), so the results are
frozen into the JSON file that the acceptance suite reads.
"""

import hashlib
import json
import sys
import time
from pathlib import Path

from renalmorph.morphology import DEFAULT_PIPELINE
from renalmorph.morphology.reference import reference_run_pipeline
from renalmorph.phantom import PerturbationSpec, generate_ground_truth, perturb, random_phantom_spec

N_PHANTOMS = 20
PHANTOM_SEED0 = 1000
PERTURB_SEED0 = 2000
PERTURBATION = dict(speckle_count=30, speckle_max_size=33, hole_count=4, hole_max_radius=3)


def counts(gt, pred):
    """|gt|, |pred|, |gt & pred| by plain iteration."""
    a = b = both = 0
    for g, p in zip(gt.voxels.ravel().tolist(), pred.voxels.ravel().tolist()):
        a += g
        b += p
        both += g and p
    return a, b, both


def digest(v):
    return hashlib.sha256(v.packed()).hexdigest()


def build_case(i):
    spec = random_phantom_spec(PHANTOM_SEED0 + i)
    gt = generate_ground_truth(spec)
    raw = perturb(gt, PerturbationSpec(seed=PERTURB_SEED0 + i, **PERTURBATION))
    return spec, gt, raw


def main():
    cases = []
    for i in range(N_PHANTOMS):
        t0 = time.time()
        spec, gt, raw = build_case(i)
        post = reference_run_pipeline(raw, DEFAULT_PIPELINE)
        g, r, gr = counts(gt, raw)
        _, p, gp = counts(gt, post)
        cases.append({
            "phantom_seed": PHANTOM_SEED0 + i,
            "perturb_seed": PERTURB_SEED0 + i,
            "dims": list(spec.dims),
            "gt_sha256": digest(gt),
            "raw_sha256": digest(raw),
            "post_sha256": digest(post),
            "gt_count": g,
            "raw_count": r,
            "raw_intersection": gr,
            "post_count": p,
            "post_intersection": gp,
            "dice_raw": 2 * gr / (g + r),
            "dice_post": 2 * gp / (g + p),
        })
        print(f"phantom {i}: dims {spec.dims} dice {cases[-1]['dice_raw']:.5f} -> {cases[-1]['dice_post']:.5f} ({time.time() - t0:.1f}s)", file=sys.stderr)
    doc = {"pipeline": DEFAULT_PIPELINE.to_list(), "perturbation": PERTURBATION, "cases": cases}
    out = Path(__file__).with_name("phantom_oracle.json")
    out.write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
