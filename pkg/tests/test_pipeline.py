import json

import numpy as np
import pytest

from renalmorph.metrics import dice
from renalmorph.morphology import (
    DEFAULT_PIPELINE,
    Clean,
    Dilate,
    Erode,
    Fill,
    Majority,
    PipelineError,
    PipelineSpec,
    run_pipeline,
)
from renalmorph.morphology.reference import reference_run_pipeline
from renalmorph.phantom import PerturbationSpec, generate_ground_truth, perturb, random_phantom_spec
from renalmorph.voxel import BinaryVolume

from conftest import random_volumes


def test_default_pipeline_order():
    assert DEFAULT_PIPELINE.to_list() == [
        {"op": "dilate", "se": "cross6"},
        {"op": "erode", "se": "cross6"},
        {"op": "clean", "keep": 2, "min_voxels": 64, "connectivity": 26},
        {"op": "majority", "threshold": 14},
        {"op": "fill", "connectivity": 6},
    ]


def test_json_round_trip():
    text = '[{"op":"dilate","se":"cross6"},{"op":"clean","keep":2,"min_voxels":64}]'
    spec = PipelineSpec.from_json(text)
    assert spec.steps == (Dilate("cross6"), Clean(2, 64, 26))
    assert PipelineSpec.from_json(spec.to_json()) == spec
    assert PipelineSpec.from_json(DEFAULT_PIPELINE.to_json()) == DEFAULT_PIPELINE


def test_empty_pipeline_is_identity():
    spec = PipelineSpec.from_json("[]")
    for v in random_volumes(1, 5):
        out = run_pipeline(v, spec)
        assert out == v and out.spacing_mm == v.spacing_mm


@pytest.mark.parametrize(
    "doc, step, fragment",
    [
        ('[{"op":"open"}]', 0, "unknown op"),
        ('[{"op":"fill"},{"op":"dilate","radius":2}]', 1, "unknown key"),
        ('[{"op":"majority","threshold":30}]', 0, "threshold"),
        ('[{"op":"majority","threshold":1.5}]', 0, "integer"),
        ('[{"op":"clean","keep":0}]', 0, "keep"),
        ('[{"op":"fill","connectivity":8}]', 0, "connectivity"),
        ('[{"op":"erode","se":"diamond"}]', 0, "structuring element"),
        ('[{"op":"erode","se":3}]', 0, "structuring element"),
        ('["dilate"]', 0, "expected an object"),
    ],
)
def test_invalid_steps_report_index(doc, step, fragment):
    with pytest.raises(PipelineError, match=fragment) as info:
        PipelineSpec.from_json(doc)
    assert info.value.step == step
    assert f"step {step}" in str(info.value)


@pytest.mark.parametrize("doc", ['{"op":"fill"}', "not json", '"fill"'])
def test_document_must_be_array(doc):
    with pytest.raises(PipelineError):
        PipelineSpec.from_json(doc)


def test_closing_is_extensive_away_from_border():
    spec = PipelineSpec((Dilate("cross6"), Erode("cross6")))
    for v in random_volumes(7, 50, density=0.3, pad=1):
        out = run_pipeline(v, spec)
        assert not (v.voxels & ~out.voxels).any()
        assert out == reference_run_pipeline(v, spec)


def test_closing_not_extensive_on_border():
    # out-of-volume counts as background, so erosion trims border voxels
    spec = PipelineSpec((Dilate("cross6"), Erode("cross6")))
    v = BinaryVolume.ones(3, 3, 3)
    out = run_pipeline(v, spec)
    assert out == reference_run_pipeline(v, spec)
    assert out.voxels.sum() == 1


def test_default_pipeline_matches_reference():
    for v in random_volumes(8, 30, max_dim=14):
        assert run_pipeline(v) == reference_run_pipeline(v, DEFAULT_PIPELINE)


def test_pipeline_deterministic():
    v = random_volumes(9, 1, max_dim=20)[0]
    a, b = run_pipeline(v), run_pipeline(v)
    assert a == b and a.voxels.tobytes() == b.voxels.tobytes()


def test_removal_only_majority_is_intersection():
    v = random_volumes(10, 1, max_dim=12, density=0.5)[0]
    voted = run_pipeline(v, PipelineSpec((Majority(14),)))
    retained = v.with_voxels(voted.voxels & v.voxels)
    assert not (retained.voxels & ~v.voxels).any()


def test_default_pipeline_undoes_speckle_and_holes():
    # the pipeline changes a clean phantom slightly (majority trims caps), but
    # speckle and enclosed holes are removed entirely: post == pipeline(gt)
    for i in range(3):
        gt = generate_ground_truth(random_phantom_spec(40 + i))
        raw = perturb(gt, PerturbationSpec(speckle_count=10, speckle_max_size=33, hole_count=3, hole_max_radius=3, seed=i))
        assert raw != gt
        post = run_pipeline(raw)
        assert post == run_pipeline(gt)
        assert dice(gt, post) > 0.95


def test_pipeline_spec_rejects_foreign_steps():
    with pytest.raises(PipelineError):
        PipelineSpec(("dilate",))
