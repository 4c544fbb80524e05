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

"""Python bindings for the PatchShield certified patch defense."""

import json

import numpy as np

from patchshield import _core
from patchshield._core import (
    PatchShieldError,
    compute_mask_params,
    generate_1d_index_set,
    generate_shape_cover_set,
    mask_set_size,
    max_certified_patch_size,
    shapes_dominate,
)

__all__ = [
    "PatchShieldError",
    "certify",
    "compute_mask_params",
    "decode_response",
    "encode_request",
    "generate_1d_index_set",
    "generate_mask_set_2d",
    "generate_multi_patch_mask_set",
    "generate_shape_cover_mask_set",
    "generate_shape_cover_set",
    "mask_set_size",
    "max_certified_patch_size",
    "predict",
    "shapes_dominate",
    "simulate",
    "verify_r_covering",
]


def _dump(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def generate_mask_set_2d(height, width, patch_h, patch_w, budget_h, budget_w, channels=1):
    """Sliding-mask grid as a mask-set document (dict)."""
    return json.loads(
        _core.generate_mask_set_2d(height, width, patch_h, patch_w, budget_h, budget_w, channels)
    )


def generate_shape_cover_mask_set(height, width, shapes, budget_h, budget_w, channels=1):
    return json.loads(
        _core.generate_shape_cover_mask_set(height, width, shapes, budget_h, budget_w, channels)
    )


def generate_multi_patch_mask_set(masks, patches):
    return json.loads(_core.generate_multi_patch_mask_set(_dump(masks), patches))


def verify_r_covering(masks, shapes):
    return _core.verify_r_covering(_dump(masks), shapes)


def predict(image, masks, backend, algo="double", fill=0.0, seed=None):
    """Robust prediction. `backend` is "table:FILE" or "remote:URL"."""
    return json.loads(
        _core.predict(np.asarray(image, dtype=np.float32), _dump(masks), backend, algo, fill, seed)
    )


def certify(image, label, masks, backend, patch_h, patch_w, patches=1, full_matrix=False,
            fill=0.0):
    return json.loads(
        _core.certify(np.asarray(image, dtype=np.float32), label, _dump(masks), backend,
                      patch_h, patch_w, patches, full_matrix, fill)
    )


def simulate(game, algo="both", trials=None, seed=None):
    return json.loads(_core.simulate(_dump(game), algo, trials, seed))


def encode_request(images):
    return _core.encode_request([np.asarray(i, dtype=np.float32) for i in images])


def decode_response(body, expected):
    return _core.decode_response(body, expected)
