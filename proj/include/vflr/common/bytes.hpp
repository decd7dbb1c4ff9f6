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

#ifndef VFLR_COMMON_BYTES_HPP_
#define VFLR_COMMON_BYTES_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vflr/common/error.hpp"

namespace vflr {

using Bytes = std::vector<std::uint8_t>;

// Appends big-endian fields to a growing buffer.
class ByteWriter {
 public:
  ByteWriter() = default;

  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  // IEEE-754 binary64, big-endian.
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void raw(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
  }

  // 4-byte big-endian length followed by the bytes.
  void prefixed(std::span<const std::uint8_t> data) {
    if (data.size() > UINT32_MAX) throw RangeError("field exceeds 4 GiB");
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
  }

  void str(std::string_view s) {
    prefixed({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }

  const Bytes& bytes() const& { return buf_; }
  Bytes take() && { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

// Consumes big-endian fields; throws DecodeError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  double f64() { return std::bit_cast<double>(u64()); }

  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::uint8_t> prefixed() { return raw(u32()); }

  std::string str() {
    auto s = prefixed();
    return {reinterpret_cast<const char*>(s.data()), s.size()};
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

  void expect_done() const {
    if (!done()) throw DecodeError("trailing bytes in message");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DecodeError("truncated message");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace vflr

#endif  // VFLR_COMMON_BYTES_HPP_
