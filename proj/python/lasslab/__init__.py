# Copyright 2026 The LaSS Lab Authors. All Rights Reserved.
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

"""Python access to the LaSS toy lab: pipeline commands, masks, checkpoints."""

from ._core import (
    LangPair,
    LassError,
    Mask,
    commands,
    corpus_bleu,
    crc32,
    intersection_count,
    load_checkpoint,
    load_mask,
    load_mask_dir,
    mask_from_bytes,
    run,
    similarity,
    spearman,
)

__all__ = [
    "LangPair",
    "LassError",
    "Mask",
    "commands",
    "corpus_bleu",
    "crc32",
    "intersection_count",
    "load_checkpoint",
    "load_mask",
    "load_mask_dir",
    "mask_from_bytes",
    "run",
    "similarity",
    "spearman",
]
