/*
 * Copyright 2026 The vflr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VFLR_PROTOCOL_MESSAGE_HPP_
#define VFLR_PROTOCOL_MESSAGE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vflr/common/bytes.hpp"
#include "vflr/encoding/float_codec.hpp"

namespace vflr::protocol {

enum class Role : std::uint8_t { Coordinator = 0, ProviderA = 1, ProviderB = 2 };
std::string_view role_name(Role r);

enum class MessageKind : std::uint8_t {
  PublicKey = 1,
  EncMask = 2,
  HoldoutInit = 3,
  ModelBroadcast = 4,
  EncPartialU = 5,
  EncWZ = 6,
  EncGradParts = 7,
  EncLoss = 8,
  Abort = 9,
};
std::string_view kind_name(MessageKind k);

enum class Phase : std::uint8_t { Gradient = 1, Loss = 2, Finish = 3 };

struct Frame {
  MessageKind kind = MessageKind::Abort;
  std::uint64_t session = 0;
  std::uint64_t seq = 0;
  Bytes payload;
};

// 4-byte BE length of what follows, kind, 8-byte BE session, 8-byte BE seq,
// payload.
inline constexpr std::size_t kFrameHeader = 4 + 1 + 8 + 8;
Bytes encode_frame(const Frame& f);
Frame decode_frame(std::span<const std::uint8_t> bytes);

using encoding::EncryptedNumber;
using encoding::FloatCodec;

struct ModelBroadcast {
  Phase phase = Phase::Gradient;
  std::vector<double> theta;
};

// C -> A carries only h. A -> B adds the hold-out rows, <u> and <m o y>_H.
struct HoldoutInit {
  std::uint32_t h = 0;
  std::vector<std::uint32_t> rows;
  std::vector<EncryptedNumber> u;
  std::vector<EncryptedNumber> my;
};

// A -> B. Gradient: rows = batch, parts = <u'>. Loss: parts = <m_H o u>,
// extra = {<u'>}.
struct PartialU {
  Phase phase = Phase::Gradient;
  std::vector<double> theta;
  std::vector<std::uint32_t> rows;
  std::vector<EncryptedNumber> parts;
  std::vector<EncryptedNumber> extra;
};

struct WZ {
  std::vector<EncryptedNumber> w;
  std::vector<EncryptedNumber> z;
};

struct GradParts {
  std::vector<EncryptedNumber> z_a;
  std::vector<EncryptedNumber> z_b;
};

Bytes encode_model(const ModelBroadcast& m);
ModelBroadcast decode_model(std::span<const std::uint8_t> p);

Bytes encode_holdout(const FloatCodec* codec, const HoldoutInit& m);
HoldoutInit decode_holdout(const FloatCodec* codec,
                           std::span<const std::uint8_t> p);

Bytes encode_partial(const FloatCodec& codec, const PartialU& m);
PartialU decode_partial(const FloatCodec& codec,
                        std::span<const std::uint8_t> p);

Bytes encode_wz(const FloatCodec& codec, const WZ& m);
WZ decode_wz(const FloatCodec& codec, std::span<const std::uint8_t> p);

Bytes encode_grad(const FloatCodec& codec, const GradParts& m);
GradParts decode_grad(const FloatCodec& codec, std::span<const std::uint8_t> p);

Bytes encode_vector(const FloatCodec& codec,
                    std::span<const EncryptedNumber> v);
std::vector<EncryptedNumber> decode_vector(const FloatCodec& codec,
                                           std::span<const std::uint8_t> p);

// [begin, end) byte ranges holding ciphertexts or key material in a payload
// of the given kind. Parsing stops quietly at the first malformed field.
std::vector<std::pair<std::size_t, std::size_t>> opaque_spans(
    MessageKind kind, std::span<const std::uint8_t> payload);

Bytes encode_abort(std::string_view reason);
std::string decode_abort(std::span<const std::uint8_t> p);

}  // namespace vflr::protocol

#endif  // VFLR_PROTOCOL_MESSAGE_HPP_
