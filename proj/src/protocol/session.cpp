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

#include "vflr/protocol/session.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "vflr/common/error.hpp"
#include "vflr/learn/dataset.hpp"
#include "vflr/linkage/match.hpp"

namespace vflr::protocol {

using encoding::EncryptedNumber;
using encoding::FloatCodec;

void SessionConfig::validate(std::size_t n) const {
  train.validate(n);
  if (train.holdout == 0) {
    throw ConfigError("secure training needs a hold-out set (holdout >= 1)");
  }
  if (train.loss != learn::LossKind::Taylor) {
    throw ConfigError("secure training supports the Taylor loss only");
  }
  if (!(audit_ceiling >= 0.0 && audit_ceiling <= 1.0)) {
    throw ConfigError("audit ceiling must lie in [0, 1]");
  }
}

// ---- Port ----------------------------------------------------------------

Port::Port(Role self, Role peer, Link& link, std::uint64_t session,
           Transcript* transcript)
    : self_(self),
      peer_(peer),
      link_(link),
      session_(session),
      transcript_(transcript) {}

void Port::send(MessageKind kind, Bytes payload, std::size_t ciphertexts,
                const std::string& tag) {
  Frame f;
  f.kind = kind;
  f.session = session_;
  f.seq = ++sent_;
  f.payload = std::move(payload);
  Bytes wire = encode_frame(f);
  if (transcript_ != nullptr) {
    transcript_->record(
        {self_, peer_, kind, tag, epoch_, ciphertexts, std::move(f.payload)});
  }
  link_.send(std::move(wire));
}

Frame Port::receive() {
  Frame f = decode_frame(link_.receive());
  if (f.session != session_) {
    throw ProtocolError("message from " + std::string(role_name(peer_)) +
                        " belongs to another session");
  }
  if (f.seq != received_ + 1) {
    throw ProtocolError("out-of-order message from " +
                        std::string(role_name(peer_)) + ": expected seq " +
                        std::to_string(received_ + 1) + ", got " +
                        std::to_string(f.seq));
  }
  received_ = f.seq;
  if (f.kind == MessageKind::Abort) {
    throw PeerAborted(std::string(role_name(peer_)) +
                      " aborted: " + decode_abort(f.payload));
  }
  return f;
}

Frame Port::expect(MessageKind kind) {
  Frame f = receive();
  if (f.kind != kind) {
    throw ProtocolError("expected " + std::string(kind_name(kind)) + " from " +
                        std::string(role_name(peer_)) + ", got " +
                        std::string(kind_name(f.kind)));
  }
  return f;
}

void Port::abort(const std::string& reason) noexcept {
  try {
    send(MessageKind::Abort, encode_abort(reason), 0, "abort");
  } catch (...) {
  }
  close();
}

void Port::close() noexcept {
  try {
    link_.close();
  } catch (...) {
  }
}

namespace {

template <typename Fn>
void guarded(std::initializer_list<Port*> ports, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    for (Port* p : ports) p->abort(e.what());
    throw;
  }
  for (Port* p : ports) p->close();
}

std::vector<EncryptedNumber> pick(const std::vector<EncryptedNumber>& v,
                                  const std::vector<std::size_t>& rows) {
  std::vector<EncryptedNumber> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v.at(r));
  return out;
}

std::vector<std::uint32_t> to_u32(const std::vector<std::size_t>& rows) {
  return {rows.begin(), rows.end()};
}

std::vector<std::size_t> to_size(const std::vector<std::uint32_t>& rows,
                                 std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    if (r >= n) throw ProtocolError("row index out of range");
    out.push_back(r);
  }
  return out;
}

// Column j of X restricted to rows, scaled.
std::vector<double> column(const Eigen::MatrixXd& X,
                           const std::vector<std::size_t>& rows,
                           Eigen::Index j, double scale = 1.0) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = X(static_cast<Eigen::Index>(rows[i]), j) * scale;
  }
  return out;
}

std::vector<std::vector<std::size_t>> batches_of(
    const std::vector<std::size_t>& train, std::size_t batch) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t pos = 0;
  for (auto size : learn::batch_sizes(train.size(), batch)) {
    out.emplace_back(train.begin() + static_cast<long>(pos),
                     train.begin() + static_cast<long>(pos + size));
    pos += size;
  }
  return out;
}

he::PublicKey read_key(Port& port) {
  const Frame f = port.expect(MessageKind::PublicKey);
  return he::PublicKey::deserialize(f.payload);
}

std::vector<EncryptedNumber> read_mask(Port& port, const FloatCodec& codec,
                                       std::size_t n) {
  const Frame f = port.expect(MessageKind::EncMask);
  auto mask = decode_vector(codec, f.payload);
  if (mask.size() != n) {
    throw ProtocolError("encrypted mask has " + std::to_string(mask.size()) +
                        " entries, expected " + std::to_string(n));
  }
  return mask;
}

void check_theta(const std::vector<double>& theta, std::size_t min_d) {
  if (theta.size() <= min_d) throw ProtocolError("model too short");
  for (double t : theta) {
    if (!std::isfinite(t)) throw ProtocolError("non-finite model received");
  }
}

}  // namespace

// ---- Coordinator ---------------------------------------------------------

Coordinator::Coordinator(SessionConfig cfg, CoordinatorInput input)
    : cfg_(std::move(cfg)), in_(std::move(input)) {}

const he::KeyPair& Coordinator::keys() const {
  if (!in_.keys) throw ProtocolError("keys not generated yet");
  return *in_.keys;
}

void Coordinator::run(Link& to_a, Link& to_b, Transcript* transcript) {
  Port a(Role::Coordinator, Role::ProviderA, to_a, cfg_.session_id, transcript);
  Port b(Role::Coordinator, Role::ProviderB, to_b, cfg_.session_id, transcript);
  guarded({&a, &b}, [&] {
    const std::size_t n = in_.mask.size();
    cfg_.validate(n);
    if (in_.d_a == 0 || in_.d_b == 0) {
      throw ConfigError("both providers need at least one feature");
    }
    result_.audit = audit_batch_leakage(in_.mask, cfg_.train.batch);
    if (result_.audit.p_at_most_one > cfg_.audit_ceiling) {
      throw ProtocolError("batch audit failed: P[<=1 match per batch] = " +
                          std::to_string(result_.audit.p_at_most_one));
    }
    if (!in_.keys) {
      he::KeygenOptions opt;
      opt.bits = cfg_.key_bits;
      opt.allow_insecure = cfg_.allow_insecure;
      in_.keys = he::generate_keypair(opt);
    }
    const auto& sk = in_.keys->private_key;
    const FloatCodec codec(in_.keys->public_key, cfg_.base);

    const Bytes pk = codec.public_key().serialize();
    a.send(MessageKind::PublicKey, pk, 0, "setup");
    b.send(MessageKind::PublicKey, pk, 0, "setup");
    const auto enc_mask = linkage::encrypt_mask(in_.mask, codec, sk);
    const Bytes mask_bytes = encode_vector(codec, enc_mask);
    a.send(MessageKind::EncMask, mask_bytes, n, "setup");
    b.send(MessageKind::EncMask, mask_bytes, n, "setup");
    HoldoutInit init;
    init.h = static_cast<std::uint32_t>(cfg_.train.holdout);
    a.send(MessageKind::HoldoutInit, encode_holdout(nullptr, init), 0,
           "holdout");

    const std::size_t d = in_.d_a + in_.d_b;
    learn::Sag sag(cfg_.train, static_cast<Eigen::Index>(d),
                   learn::batch_sizes(n - cfg_.train.holdout, cfg_.train.batch));
    learn::EarlyStopping stopper(cfg_.train.patience, cfg_.train.min_delta);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    auto broadcast = [&](Phase phase) {
      ModelBroadcast m{phase, {theta.data(), theta.data() + theta.size()}};
      a.send(MessageKind::ModelBroadcast, encode_model(m), 0,
             phase == Phase::Gradient ? "gradient"
             : phase == Phase::Loss   ? "loss"
                                      : "finish");
    };

    for (std::size_t epoch = 1; epoch <= cfg_.train.max_epochs; ++epoch) {
      a.set_epoch(epoch);
      b.set_epoch(epoch);
      for (std::size_t bi = 0; bi < sag.num_batches(); ++bi) {
        broadcast(Phase::Gradient);
        const GradParts g =
            decode_grad(codec, a.expect(MessageKind::EncGradParts).payload);
        if (g.z_a.size() != in_.d_a || g.z_b.size() != in_.d_b) {
          throw ProtocolError("gradient parts have the wrong length");
        }
        Eigen::VectorXd grad(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < in_.d_a; ++j) {
          grad[static_cast<Eigen::Index>(j)] = codec.decrypt(sk, g.z_a[j]);
        }
        for (std::size_t j = 0; j < in_.d_b; ++j) {
          grad[static_cast<Eigen::Index>(in_.d_a + j)] =
              codec.decrypt(sk, g.z_b[j]);
        }
        if (!grad.allFinite()) throw ProtocolError("non-finite gradient");
        result_.gradients.push_back({epoch, bi, theta, grad});
        sag.step(theta, bi, grad);
      }
      broadcast(Phase::Loss);
      const auto loss_ct =
          decode_vector(codec, b.expect(MessageKind::EncLoss).payload);
      if (loss_ct.size() != 1) throw ProtocolError("loss message malformed");
      learn::TraceRow row;
      row.epoch = epoch;
      row.holdout_taylor = codec.decrypt(sk, loss_ct[0]);
      result_.trace.push_back(row);
      result_.theta = theta;
      result_.epochs = epoch;
      if (!theta.allFinite() || !std::isfinite(row.holdout_taylor)) {
        throw learn::DivergenceError("secure training diverged", result_.trace);
      }
      if (stopper.update(row.holdout_taylor, result_.trace)) {
        result_.early_stopped = true;
        break;
      }
    }
    result_.theta = theta;
    broadcast(Phase::Finish);
  });
}

// ---- Provider A ----------------------------------------------------------

ProviderA::ProviderA(SessionConfig cfg, ProviderAInput input)
    : cfg_(std::move(cfg)), in_(std::move(input)) {}

void ProviderA::run(Link& to_c, Link& to_b, Transcript* transcript) {
  Port c(Role::ProviderA, Role::Coordinator, to_c, cfg_.session_id, transcript);
  Port b(Role::ProviderA, Role::ProviderB, to_b, cfg_.session_id, transcript);
  guarded({&c, &b}, [&] {
    const auto n = static_cast<std::size_t>(in_.X.rows());
    const auto d_a = static_cast<std::size_t>(in_.X.cols());
    if (in_.y.size() != in_.X.rows()) {
      throw DimensionError("label count != row count");
    }
    for (Eigen::Index i = 0; i < in_.y.size(); ++i) {
      if (in_.y[i] != 1.0 && in_.y[i] != -1.0) {
        throw ConfigError("labels must be +1 or -1");
      }
    }
    const FloatCodec codec(read_key(c), cfg_.base);
    const auto mask = read_mask(c, codec, n);
    const HoldoutInit req =
        decode_holdout(nullptr, c.expect(MessageKind::HoldoutInit).payload);
    if (req.h == 0 || req.h >= n) throw ProtocolError("bad hold-out size");
    const std::size_t h = req.h;
    const auto holdout = learn::sample_holdout(n, h, cfg_.train.seed);
    const auto batches =
        batches_of(learn::complement(n, holdout), cfg_.train.batch);
    const auto mask_h = pick(mask, holdout);

    // <m o y>_H and <u> = (1/h) <m o y>_H^T X_A,H.
    HoldoutInit init;
    init.h = static_cast<std::uint32_t>(h);
    init.rows = to_u32(holdout);
    for (std::size_t i = 0; i < h; ++i) {
      const auto yi = static_cast<std::int64_t>(
          in_.y[static_cast<Eigen::Index>(holdout[i])]);
      init.my.push_back(codec.mul_plain(mask_h[i], codec.encode_integer(yi)));
    }
    for (std::size_t j = 0; j < d_a; ++j) {
      init.u.push_back(codec.dot(
          init.my,
          column(in_.X, holdout, static_cast<Eigen::Index>(j), 1.0 / h)));
    }
    b.send(MessageKind::HoldoutInit, encode_holdout(&codec, init), h + d_a,
           "holdout");

    std::size_t cursor = 0;
    std::size_t epoch = 1;
    while (true) {
      const ModelBroadcast m =
          decode_model(c.expect(MessageKind::ModelBroadcast).payload);
      if (m.phase == Phase::Finish) {
        b.send(MessageKind::ModelBroadcast, encode_model(m), 0, "finish");
        return;
      }
      check_theta(m.theta, d_a);
      Eigen::Map<const Eigen::VectorXd> theta_a(m.theta.data(),
                                                static_cast<Eigen::Index>(d_a));
      c.set_epoch(epoch);
      b.set_epoch(epoch);
      if (m.phase == Phase::Gradient) {
        const auto& rows = batches[cursor];
        cursor = (cursor + 1) % batches.size();
        PartialU msg;
        msg.phase = Phase::Gradient;
        msg.theta = m.theta;
        msg.rows = to_u32(rows);
        for (auto r : rows) {
          const auto ri = static_cast<Eigen::Index>(r);
          const double v = 0.25 * in_.X.row(ri).dot(theta_a) - 0.5 * in_.y[ri];
          msg.parts.push_back(codec.mul_plain(mask[r], v));
        }
        b.send(MessageKind::EncPartialU, encode_partial(codec, msg),
               msg.parts.size(), "gradient");
        WZ wz = decode_wz(codec, b.expect(MessageKind::EncWZ).payload);
        if (wz.w.size() != rows.size() ||
            wz.z.size() != m.theta.size() - d_a) {
          throw ProtocolError("EncWZ has the wrong shape");
        }
        GradParts out;
        for (std::size_t j = 0; j < d_a; ++j) {
          out.z_a.push_back(
              codec.dot(wz.w, column(in_.X, rows, static_cast<Eigen::Index>(j))));
        }
        out.z_b = std::move(wz.z);
        const std::size_t cts = out.z_a.size() + out.z_b.size();
        c.send(MessageKind::EncGradParts, encode_grad(codec, out), cts,
               "gradient");
      } else {
        PartialU msg;
        msg.phase = Phase::Loss;
        msg.theta = m.theta;
        std::vector<double> sq(h);
        for (std::size_t i = 0; i < h; ++i) {
          const double u =
              in_.X.row(static_cast<Eigen::Index>(holdout[i])).dot(theta_a);
          msg.parts.push_back(codec.mul_plain(mask_h[i], u));
          sq[i] = u * u / (8.0 * static_cast<double>(h));
        }
        msg.extra.push_back(codec.dot(mask_h, sq));
        b.send(MessageKind::EncPartialU, encode_partial(codec, msg), h + 1,
               "loss");
        ++epoch;
      }
    }
  });
}

// ---- Provider B ----------------------------------------------------------

ProviderB::ProviderB(SessionConfig cfg, ProviderBInput input)
    : cfg_(std::move(cfg)), in_(std::move(input)) {}

void ProviderB::run(Link& to_c, Link& to_a, Transcript* transcript) {
  Port c(Role::ProviderB, Role::Coordinator, to_c, cfg_.session_id, transcript);
  Port a(Role::ProviderB, Role::ProviderA, to_a, cfg_.session_id, transcript);
  guarded({&c, &a}, [&] {
    const auto n = static_cast<std::size_t>(in_.X.rows());
    const auto d_b = static_cast<std::size_t>(in_.X.cols());
    const FloatCodec codec(read_key(c), cfg_.base);
    const auto mask = read_mask(c, codec, n);

    std::vector<std::size_t> holdout;
    std::vector<EncryptedNumber> mask_h;
    std::vector<EncryptedNumber> mu;  // <mu_H> = [<u>, <v>]
    std::size_t epoch = 1;
    while (true) {
      const Frame f = a.receive();
      if (f.kind == MessageKind::HoldoutInit) {
        if (!mu.empty()) throw ProtocolError("duplicate HoldoutInit");
        HoldoutInit init = decode_holdout(&codec, f.payload);
        if (init.h == 0 || init.rows.size() != init.h ||
            init.my.size() != init.h || init.u.empty()) {
          throw ProtocolError("HoldoutInit malformed");
        }
        holdout = to_size(init.rows, n);
        mask_h = pick(mask, holdout);
        mu = std::move(init.u);
        for (std::size_t j = 0; j < d_b; ++j) {
          mu.push_back(codec.dot(
              init.my, column(in_.X, holdout, static_cast<Eigen::Index>(j),
                              1.0 / init.h)));
        }
        mu_bytes_.clear();
        for (const auto& e : mu) {
          mu_bytes_.push_back(codec.public_key().serialize(e.significand));
        }
        continue;
      }
      if (f.kind == MessageKind::ModelBroadcast) {
        const ModelBroadcast m = decode_model(f.payload);
        if (m.phase != Phase::Finish) {
          throw ProtocolError("provider B only expects Finish broadcasts");
        }
        return;
      }
      if (f.kind != MessageKind::EncPartialU) {
        throw ProtocolError("unexpected " + std::string(kind_name(f.kind)) +
                            " from provider-a");
      }
      if (mu.empty()) throw ProtocolError("EncPartialU before HoldoutInit");
      PartialU msg = decode_partial(codec, f.payload);
      if (msg.theta.size() != mu.size()) {
        throw ProtocolError("model length does not match feature count");
      }
      check_theta(msg.theta, d_b);
      const std::size_t d_a = msg.theta.size() - d_b;
      Eigen::Map<const Eigen::VectorXd> theta_b(
          msg.theta.data() + d_a, static_cast<Eigen::Index>(d_b));
      c.set_epoch(epoch);
      a.set_epoch(epoch);
      if (msg.phase == Phase::Gradient) {
        const auto rows = to_size(msg.rows, n);
        if (rows.empty() || msg.parts.size() != rows.size()) {
          throw ProtocolError("EncPartialU malformed");
        }
        WZ out;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double v =
              0.25 * in_.X.row(static_cast<Eigen::Index>(rows[i])).dot(theta_b);
          out.w.push_back(
              codec.add(msg.parts[i], codec.mul_plain(mask[rows[i]], v)));
        }
        for (std::size_t j = 0; j < d_b; ++j) {
          out.z.push_back(
              codec.dot(out.w, column(in_.X, rows, static_cast<Eigen::Index>(j))));
        }
        const std::size_t cts = out.w.size() + out.z.size();
        a.send(MessageKind::EncWZ, encode_wz(codec, out), cts, "gradient");
      } else if (msg.phase == Phase::Loss) {
        const std::size_t h = holdout.size();
        if (msg.parts.size() != h || msg.extra.size() != 1) {
          throw ProtocolError("loss EncPartialU malformed");
        }
        std::vector<double> sq(h), cross(h);
        for (std::size_t i = 0; i < h; ++i) {
          const double v =
              in_.X.row(static_cast<Eigen::Index>(holdout[i])).dot(theta_b);
          sq[i] = v * v / (8.0 * static_cast<double>(h));
          cross[i] = v / (4.0 * static_cast<double>(h));
        }
        std::vector<double> half(msg.theta.size());
        for (std::size_t j = 0; j < half.size(); ++j) {
          half[j] = -0.5 * msg.theta[j];
        }
        EncryptedNumber loss = codec.add(msg.extra[0], codec.dot(mask_h, sq));
        loss = codec.add(loss, codec.dot(msg.parts, cross));
        loss = codec.add(loss, codec.dot(mu, half));
        const std::vector<EncryptedNumber> one{loss};
        c.send(MessageKind::EncLoss, encode_vector(codec, one), 1, "loss");
        ++epoch;
      } else {
        throw ProtocolError("EncPartialU with Finish phase");
      }
    }
  });
}

// ---- Drivers -------------------------------------------------------------

namespace {

struct Outcome {
  bool failed = false;
  bool secondary = false;  // caused by another party's failure
  std::string what;
};

template <typename Fn>
Outcome capture(Fn&& fn) {
  Outcome o;
  try {
    fn();
  } catch (const PeerAborted& e) {
    o = {true, true, e.what()};
  } catch (const TransportError& e) {
    o = {true, true, e.what()};
  } catch (const std::exception& e) {
    o = {true, false, e.what()};
  }
  return o;
}

}  // namespace

SessionResult run_session(const SessionConfig& cfg, CoordinatorInput c,
                          ProviderAInput a, ProviderBInput b,
                          Transcript* transcript) {
  auto ca = make_in_process_link();
  auto cb = make_in_process_link();
  auto ab = make_in_process_link();
  Coordinator coord(cfg, std::move(c));
  ProviderA pa(cfg, std::move(a));
  ProviderB pb(cfg, std::move(b));
  Outcome oa, ob, oc;
  std::thread ta([&] {
    oa = capture([&] { pa.run(*ca.second, *ab.first, transcript); });
  });
  std::thread tb([&] {
    ob = capture([&] { pb.run(*cb.second, *ab.second, transcript); });
  });
  oc = capture([&] { coord.run(*ca.first, *cb.first, transcript); });
  ta.join();
  tb.join();

  SessionResult out;
  out.coordinator = coord.result();
  out.mean_ciphertexts = pb.mean_ciphertexts();
  for (const Outcome* o : {&oc, &oa, &ob}) {
    if (o->failed && !o->secondary) {
      out.aborted = true;
      out.abort_reason = o->what;
      return out;
    }
  }
  for (const Outcome* o : {&oc, &oa, &ob}) {
    if (o->failed) {
      out.aborted = true;
      out.abort_reason = o->what;
      return out;
    }
  }
  return out;
}

TcpTopology topology_from_env() {
  auto get = [](const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return parse_endpoint(v != nullptr && *v != '\0' ? v : fallback);
  };
  return {get("VFLR_COORDINATOR_ADDR", "127.0.0.1:47001"),
          get("VFLR_PROVIDER_A_ADDR", "127.0.0.1:47002")};
}

std::pair<std::unique_ptr<Link>, std::unique_ptr<Link>> connect_tcp(
    Role role, const TcpTopology& topo) {
  const auto tag = static_cast<std::uint8_t>(role);
  switch (role) {
    case Role::Coordinator: {
      TcpListener listener(topo.coordinator);
      std::unique_ptr<Link> links[3];
      for (int i = 0; i < 2; ++i) {
        auto [peer, link] = listener.accept();
        if (peer != 1 && peer != 2) throw TransportError("unknown peer role");
        if (links[peer]) throw TransportError("peer connected twice");
        links[peer] = std::move(link);
      }
      return {std::move(links[1]), std::move(links[2])};
    }
    case Role::ProviderA: {
      TcpListener listener(topo.provider_a);
      auto to_c = tcp_connect(topo.coordinator, tag);
      auto [peer, to_b] = listener.accept();
      if (peer != static_cast<std::uint8_t>(Role::ProviderB)) {
        throw TransportError("expected provider B to connect");
      }
      return {std::move(to_c), std::move(to_b)};
    }
    case Role::ProviderB: {
      auto to_c = tcp_connect(topo.coordinator, tag);
      auto to_a = tcp_connect(topo.provider_a, tag);
      return {std::move(to_c), std::move(to_a)};
    }
  }
  throw ConfigError("unknown role");
}

}  // namespace vflr::protocol
