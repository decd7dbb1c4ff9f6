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

#include "vflr/protocol/message.hpp"

#include "vflr/common/error.hpp"

namespace vflr::protocol {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::Coordinator:
      return "coordinator";
    case Role::ProviderA:
      return "provider-a";
    case Role::ProviderB:
      return "provider-b";
  }
  return "unknown";
}

std::string_view kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::PublicKey:
      return "PublicKey";
    case MessageKind::EncMask:
      return "EncMask";
    case MessageKind::HoldoutInit:
      return "HoldoutInit";
    case MessageKind::ModelBroadcast:
      return "ModelBroadcast";
    case MessageKind::EncPartialU:
      return "EncPartialU";
    case MessageKind::EncWZ:
      return "EncWZ";
    case MessageKind::EncGradParts:
      return "EncGradParts";
    case MessageKind::EncLoss:
      return "EncLoss";
    case MessageKind::Abort:
      return "Abort";
  }
  return "Unknown";
}

Bytes encode_frame(const Frame& f) {
  const std::size_t body = 1 + 8 + 8 + f.payload.size();
  if (body > UINT32_MAX) throw RangeError("frame too large");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(body));
  w.u8(static_cast<std::uint8_t>(f.kind));
  w.u64(f.session);
  w.u64(f.seq);
  w.raw(f.payload);
  return std::move(w).take();
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t len = r.u32();
  if (len != r.remaining()) throw DecodeError("frame length mismatch");
  if (len < 17) throw DecodeError("frame shorter than its header");
  Frame f;
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 9) {
    throw DecodeError("unknown message kind " + std::to_string(kind));
  }
  f.kind = static_cast<MessageKind>(kind);
  f.session = r.u64();
  f.seq = r.u64();
  auto rest = r.raw(r.remaining());
  f.payload.assign(rest.begin(), rest.end());
  return f;
}

namespace {

void write_doubles(ByteWriter& w, std::span<const double> v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (double x : v) w.f64(x);
}

std::vector<double> read_doubles(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * 8 > r.remaining()) {
    throw DecodeError("vector count exceeds payload");
  }
  std::vector<double> out(n);
  for (auto& x : out) x = r.f64();
  return out;
}

void write_rows(ByteWriter& w, std::span<const std::uint32_t> v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (auto x : v) w.u32(x);
}

std::vector<std::uint32_t> read_rows(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * 4 > r.remaining()) {
    throw DecodeError("index count exceeds payload");
  }
  std::vector<std::uint32_t> out(n);
  for (auto& x : out) x = r.u32();
  return out;
}

Phase read_phase(ByteReader& r) {
  const std::uint8_t p = r.u8();
  if (p < 1 || p > 3) throw DecodeError("unknown phase");
  return static_cast<Phase>(p);
}

}  // namespace

Bytes encode_model(const ModelBroadcast& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m.phase));
  write_doubles(w, m.theta);
  return std::move(w).take();
}

ModelBroadcast decode_model(std::span<const std::uint8_t> p) {
  ByteReader r(p);
  ModelBroadcast m;
  m.phase = read_phase(r);
  m.theta = read_doubles(r);
  r.expect_done();
  return m;
}

Bytes encode_holdout(const FloatCodec* codec, const HoldoutInit& m) {
  ByteWriter w;
  w.u32(m.h);
  const bool body = !m.rows.empty() || !m.u.empty() || !m.my.empty();
  w.u8(body ? 1 : 0);
  if (body) {
    if (codec == nullptr) throw ProtocolError("hold-out body needs a codec");
    write_rows(w, m.rows);
    codec->write(w, m.u);
    codec->write(w, m.my);
  }
  return std::move(w).take();
}

HoldoutInit decode_holdout(const FloatCodec* codec,
                           std::span<const std::uint8_t> p) {
  ByteReader r(p);
  HoldoutInit m;
  m.h = r.u32();
  const std::uint8_t body = r.u8();
  if (body > 1) throw DecodeError("bad hold-out flag");
  if (body) {
    if (codec == nullptr) throw ProtocolError("hold-out body needs a codec");
    m.rows = read_rows(r);
    m.u = codec->read_vector(r);
    m.my = codec->read_vector(r);
  }
  r.expect_done();
  return m;
}

Bytes encode_partial(const FloatCodec& codec, const PartialU& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m.phase));
  write_doubles(w, m.theta);
  write_rows(w, m.rows);
  codec.write(w, m.parts);
  codec.write(w, m.extra);
  return std::move(w).take();
}

PartialU decode_partial(const FloatCodec& codec,
                        std::span<const std::uint8_t> p) {
  ByteReader r(p);
  PartialU m;
  m.phase = read_phase(r);
  m.theta = read_doubles(r);
  m.rows = read_rows(r);
  m.parts = codec.read_vector(r);
  m.extra = codec.read_vector(r);
  r.expect_done();
  return m;
}

Bytes encode_wz(const FloatCodec& codec, const WZ& m) {
  ByteWriter w;
  codec.write(w, m.w);
  codec.write(w, m.z);
  return std::move(w).take();
}

WZ decode_wz(const FloatCodec& codec, std::span<const std::uint8_t> p) {
  ByteReader r(p);
  WZ m;
  m.w = codec.read_vector(r);
  m.z = codec.read_vector(r);
  r.expect_done();
  return m;
}

Bytes encode_grad(const FloatCodec& codec, const GradParts& m) {
  ByteWriter w;
  codec.write(w, m.z_a);
  codec.write(w, m.z_b);
  return std::move(w).take();
}

GradParts decode_grad(const FloatCodec& codec,
                      std::span<const std::uint8_t> p) {
  ByteReader r(p);
  GradParts m;
  m.z_a = codec.read_vector(r);
  m.z_b = codec.read_vector(r);
  r.expect_done();
  return m;
}

Bytes encode_vector(const FloatCodec& codec,
                    std::span<const EncryptedNumber> v) {
  ByteWriter w;
  codec.write(w, v);
  return std::move(w).take();
}

std::vector<EncryptedNumber> decode_vector(const FloatCodec& codec,
                                           std::span<const std::uint8_t> p) {
  ByteReader r(p);
  auto v = codec.read_vector(r);
  r.expect_done();
  return v;
}

namespace {

class SpanWalker {
 public:
  explicit SpanWalker(std::span<const std::uint8_t> p) : r_(p), size_(p.size()) {}

  ByteReader& reader() { return r_; }

  void blob() {
    const std::size_t begin = pos() + 4;
    r_.prefixed();
    spans.emplace_back(begin, pos());
  }

  void encrypted_vector() {
    const std::uint32_t n = r_.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      blob();
      r_.i64();
    }
  }

  void skip_array(std::size_t width) { r_.raw(std::size_t{r_.u32()} * width); }

  std::vector<std::pair<std::size_t, std::size_t>> spans;

 private:
  std::size_t pos() const { return size_ - r_.remaining(); }

  ByteReader r_;
  std::size_t size_;
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> opaque_spans(
    MessageKind kind, std::span<const std::uint8_t> payload) {
  SpanWalker w(payload);
  try {
    switch (kind) {
      case MessageKind::PublicKey:
        w.blob();
        break;
      case MessageKind::EncMask:
      case MessageKind::EncLoss:
        w.encrypted_vector();
        break;
      case MessageKind::HoldoutInit:
        w.reader().u32();
        if (w.reader().u8() == 1) {
          w.skip_array(4);
          w.encrypted_vector();
          w.encrypted_vector();
        }
        break;
      case MessageKind::EncPartialU:
        w.reader().u8();
        w.skip_array(8);
        w.skip_array(4);
        w.encrypted_vector();
        w.encrypted_vector();
        break;
      case MessageKind::EncWZ:
      case MessageKind::EncGradParts:
        w.encrypted_vector();
        w.encrypted_vector();
        break;
      case MessageKind::ModelBroadcast:
      case MessageKind::Abort:
        break;
    }
  } catch (const DecodeError&) {
  }
  return std::move(w.spans);
}

Bytes encode_abort(std::string_view reason) {
  return Bytes(reason.begin(), reason.end());
}

std::string decode_abort(std::span<const std::uint8_t> p) {
  return std::string(p.begin(), p.end());
}

}  // namespace vflr::protocol
