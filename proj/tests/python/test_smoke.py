# Copyright 2026 The PatchShield Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import pathlib
import struct
import subprocess

import numpy as np
import pytest

import patchshield as ps

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def test_index_sets_and_params():
    assert ps.generate_1d_index_set(6, 2, 1) == [0, 1, 2, 3, 4]
    assert ps.generate_1d_index_set(6, 3, 2) == [0, 2, 3]
    assert ps.compute_mask_params(224, 32, 6) == (33, 64)
    assert ps.mask_set_size(224, 64, 33) == 6
    assert ps.max_certified_patch_size(64, 33) == 32


def test_mask_set_generation_and_covering():
    masks = ps.generate_mask_set_2d(224, 224, 32, 32, 6, 6)
    assert len(masks["masks"]) == 36
    assert ps.verify_r_covering(masks, [(32, 32)])
    two = ps.generate_multi_patch_mask_set(ps.generate_mask_set_2d(1, 7, 1, 2, 1, 3), 2)
    assert two["patches"] == 2
    assert len(two["masks"]) == 6


def test_shape_cover():
    reference = [(5, 224), (12, 83), (23, 38), (39, 20), (84, 12), (224, 5)]
    assert ps.shapes_dominate(reference, 501, 224, 224)
    own = ps.generate_shape_cover_set(501, 224, 224)
    assert ps.shapes_dominate(own, 501, 224, 224)
    assert not ps.shapes_dominate(reference[1:], 501, 224, 224)


def test_predict_and_certify_with_table(tmp_path):
    table = tmp_path / "table.json"
    table.write_text(json.dumps(
        {"label_space_size": 8, "default_label": 7, "mask_fill": 0.0, "entries": {}}))
    masks = ps.generate_mask_set_2d(6, 6, 2, 2, 3, 3)
    image = np.full((6, 6), 0.5, dtype=np.float32)
    out = ps.predict(image, masks, f"table:{table}")
    assert out["label"] == 7 and out["case"] == "AGREED" and out["calls"] == 9
    out = ps.predict(image, masks, f"table:{table}", algo="challenger", seed=3)
    assert out["label"] == 7
    cert = ps.certify(image, 7, masks, f"table:{table}", 2, 2)
    assert cert["certified"] and cert["reason"] == "OK" and cert["calls"] == 45
    cert = ps.certify(image, 1, masks, f"table:{table}", 2, 2)
    assert cert["reason"] == "TWO_MASK_FAILURE"
    assert cert["failing_pair"]["masks"] == [0, 0]


def test_errors_carry_their_kind():
    with pytest.raises(ps.PatchShieldError) as info:
        ps.compute_mask_params(10, 11, 2)
    assert info.value.kind == "invalid-argument"
    masks = ps.generate_mask_set_2d(4, 4, 2, 2, 2, 2)
    with pytest.raises(ps.PatchShieldError) as info:
        ps.predict(np.zeros((4, 4)), masks, "table:/nonexistent.json")
    assert info.value.kind == "io"


def test_simulate_certified_instance():
    masks = ps.generate_mask_set_2d(1, 6, 1, 2, 1, 3)
    n = len(masks["masks"])
    base = [{"masks": [i, j], "label": 1} for i in range(n) for j in range(i, n)]
    game = {"mask_set": masks, "threat": {"shapes": [[1, 2]], "patches": 1},
            "label_space": 2, "true_label": 1, "default_label": 0, "base": base}
    report = ps.simulate(game)
    assert report["exhaustive"] and report["successes"] == 0
    assert report["certificate"]["reason"] == "OK"
    a = ps.simulate(game, trials=200, seed=5)
    assert a == ps.simulate(game, trials=200, seed=5)
    with pytest.raises(ps.PatchShieldError):
        ps.simulate(game, trials=10)


def test_wire_protocol_matches_golden_bytes():
    images = [np.array([[0.0, 0.25, 0.5], [0.75, 1.0, 0.125]]),
              np.array([[1.0, 0.0, 0.5], [0.5, 0.0625, 0.875]])]
    assert ps.encode_request(images) == (FIXTURES / "request_2x2x3x1.bin").read_bytes()
    body = (FIXTURES / "response_2.bin").read_bytes()
    assert ps.decode_response(body, 2) == list(struct.unpack("<2i", body))


@pytest.mark.skipif("PATCHSHIELD_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_gen_masks():
    out = subprocess.run(
        [os.environ["PATCHSHIELD_CLI"], "gen-masks", "--width", "224", "--height", "224",
         "--patch-h", "32", "--patch-w", "32", "--budget-h", "6", "--budget-w", "6"],
        check=True, capture_output=True, text=True).stdout
    doc = json.loads(out)
    assert len(doc["masks"]) == 36
    assert doc["params"][0]["mask_h"] == 64 and doc["params"][0]["stride_h"] == 33
