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

#ifndef VFLR_PROTOCOL_SESSION_HPP_
#define VFLR_PROTOCOL_SESSION_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vflr/encoding/float_codec.hpp"
#include "vflr/he/paillier.hpp"
#include "vflr/learn/sag.hpp"
#include "vflr/protocol/audit.hpp"
#include "vflr/protocol/message.hpp"
#include "vflr/protocol/transcript.hpp"
#include "vflr/protocol/transport.hpp"

namespace vflr::protocol {

struct SessionConfig {
  learn::TrainConfig train;  // holdout must be >= 1, loss must be Taylor
  unsigned key_bits = he::kMinSecureKeyBits;
  bool allow_insecure = false;
  unsigned base = encoding::kDefaultBase;
  std::uint64_t session_id = 1;
  // Abort before training if P[batch holds <= 1 match] exceeds this.
  double audit_ceiling = 1.0;

  void validate(std::size_t n) const;
};

// Raised when the other side sent Abort.
class PeerAborted : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// Framing, sequence numbers and transcript recording for one link.
class Port {
 public:
  Port(Role self, Role peer, Link& link, std::uint64_t session,
       Transcript* transcript = nullptr);

  void send(MessageKind kind, Bytes payload, std::size_t ciphertexts,
            const std::string& tag);
  Frame receive();
  Frame expect(MessageKind kind);
  // Best effort: sends Abort and closes the link, never throws.
  void abort(const std::string& reason) noexcept;
  void close() noexcept;

  void set_epoch(std::size_t e) { epoch_ = e; }
  Role peer() const { return peer_; }

 private:
  Role self_;
  Role peer_;
  Link& link_;
  std::uint64_t session_;
  Transcript* transcript_;
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
  std::size_t epoch_ = 0;
};

struct CoordinatorInput {
  std::vector<std::uint8_t> mask;
  std::size_t d_a = 0;
  std::size_t d_b = 0;
  std::optional<he::KeyPair> keys;  // generated when absent
};

struct ProviderAInput {
  Eigen::MatrixXd X;  // rows aligned with the mask
  Eigen::VectorXd y;  // +/-1
};

struct ProviderBInput {
  Eigen::MatrixXd X;
};

struct GradientRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  Eigen::VectorXd theta;     // model the gradient was taken at
  Eigen::VectorXd gradient;  // decrypted, unscaled batch sum
};

struct CoordinatorResult {
  Eigen::VectorXd theta;
  learn::LossTrace trace;  // holdout_taylor is the decrypted secure loss
  std::size_t epochs = 0;
  bool early_stopped = false;
  BatchAudit audit;
  std::vector<GradientRecord> gradients;
};

class Coordinator {
 public:
  Coordinator(SessionConfig cfg, CoordinatorInput input);
  // Runs to completion; partial results stay readable after a throw.
  void run(Link& to_a, Link& to_b, Transcript* transcript = nullptr);
  const CoordinatorResult& result() const { return result_; }
  const he::KeyPair& keys() const;

 private:
  SessionConfig cfg_;
  CoordinatorInput in_;
  CoordinatorResult result_;
};

class ProviderA {
 public:
  ProviderA(SessionConfig cfg, ProviderAInput input);
  void run(Link& to_c, Link& to_b, Transcript* transcript = nullptr);

 private:
  SessionConfig cfg_;
  ProviderAInput in_;
};

class ProviderB {
 public:
  ProviderB(SessionConfig cfg, ProviderBInput input);
  void run(Link& to_c, Link& to_a, Transcript* transcript = nullptr);
  // Serialized <mu_H> ciphertexts, kept for transcript audits.
  const std::vector<Bytes>& mean_ciphertexts() const { return mu_bytes_; }

 private:
  SessionConfig cfg_;
  ProviderBInput in_;
  std::vector<Bytes> mu_bytes_;
};

struct SessionResult {
  CoordinatorResult coordinator;
  bool aborted = false;
  std::string abort_reason;
  std::vector<Bytes> mean_ciphertexts;
};

// All three parties in one process, one thread each, over in-process links.
SessionResult run_session(const SessionConfig& cfg, CoordinatorInput c,
                          ProviderAInput a, ProviderBInput b,
                          Transcript* transcript = nullptr);

struct TcpTopology {
  Endpoint coordinator;  // coordinator listens here
  Endpoint provider_a;   // provider A listens here for B
};

// Reads VFLR_COORDINATOR_ADDR and VFLR_PROVIDER_A_ADDR.
TcpTopology topology_from_env();

// Links for `role`, ordered as its run() expects: C (A, B), A (C, B),
// B (C, A).
std::pair<std::unique_ptr<Link>, std::unique_ptr<Link>> connect_tcp(
    Role role, const TcpTopology& topo);

}  // namespace vflr::protocol

#endif  // VFLR_PROTOCOL_SESSION_HPP_
