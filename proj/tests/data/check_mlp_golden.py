# Copyright 2026 The cfao Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Recomputes the MLP golden logits in test_model.cpp with numpy."""

import json
import pathlib

import numpy as np

model = json.loads((pathlib.Path(__file__).parent / "mlp_golden_model.json").read_text())
x = np.array([[0.5, -1.0, 2.0], [-0.25, 0.75, 0.0]])
h = x
for i, layer in enumerate(model["layers"]):
    w = np.array(layer["weight"]).reshape(layer["rows"], layer["cols"])
    h = h @ w.T + np.array(layer["bias"])
    if i + 1 < len(model["layers"]):
        h = np.maximum(h, 0.0)
for v in h.ravel():
    print(repr(float(v)))
