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

#ifndef VFLR_COMMON_ERROR_HPP_
#define VFLR_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace vflr {

// Root of every error thrown by the library. Subclasses name the failure
// category; callers that only need a message catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class KeyMismatchError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class KeyGenerationError : public Error {
 public:
  using Error::Error;
};

// Raised by the secure protocol on malformed, out-of-order or unexpected
// messages. Any ProtocolError aborts the session.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vflr

#endif  // VFLR_COMMON_ERROR_HPP_
