# Copyright 2026 The vflr Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Vertical federated logistic regression over entity-resolved data."""

from vflr._core import (  # noqa: F401
    Ciphertext,
    Clk,
    ClkConfig,
    EncryptedNumber,
    Error,
    FloatCodec,
    Linkage,
    LossKind,
    PrivateKey,
    PublicKey,
    TrainConfig,
    build_clk,
    check_theorem1,
    closed_form_minimizer,
    dice,
    drift_recurrence,
    evaluate,
    generate_keypair,
    hypergeometric_cdf,
    match,
    run,
    train_sag,
)

__version__ = "0.1.0"
