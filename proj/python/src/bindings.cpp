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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "vflr/common/error.hpp"
#include "vflr/encoding/float_codec.hpp"
#include "vflr/he/paillier.hpp"
#include "vflr/learn/loss.hpp"
#include "vflr/learn/metrics.hpp"
#include "vflr/learn/sag.hpp"
#include "vflr/linkage/clk.hpp"
#include "vflr/linkage/match.hpp"
#include "vflr/pipeline/run.hpp"
#include "vflr/protocol/audit.hpp"
#include "vflr/theory/theory.hpp"

namespace py = pybind11;
using namespace vflr;

namespace {

// Python ints cross the boundary as decimal strings.
he::BigInt to_big(const py::int_& v) {
  return he::BigInt(py::str(py::handle(v)).cast<std::string>(), 10);
}

py::int_ from_big(const he::BigInt& v) {
  return py::int_(py::module_::import("builtins").attr("int")(v.get_str(10)));
}

theory::PermutationFactorization factorization(
    const std::vector<std::pair<std::size_t, std::size_t>>& swaps,
    const Eigen::VectorXd& y) {
  std::vector<theory::Transposition> steps;
  for (const auto& [u, v] : swaps) steps.push_back({u, v});
  return theory::make_factorization(std::move(steps), y);
}

py::dict metrics_dict(const learn::Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["auc"] = m.auc;
  d["f1"] = m.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Paillier, float encoding, CLK linkage, Taylor SAG and theory checks";

  static py::exception<Error> base(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const RangeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DimensionError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const EncodeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const OverflowError& e) {
      PyErr_SetString(PyExc_OverflowError, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  // ---- he ----
  py::class_<he::Ciphertext>(m, "Ciphertext")
      .def("__eq__", [](const he::Ciphertext& a, const he::Ciphertext& b) {
        return a == b;
      });

  py::class_<he::PublicKey>(m, "PublicKey")
      .def_property_readonly("modulus",
                             [](const he::PublicKey& k) { return from_big(k.modulus()); })
      .def_property_readonly("bits", &he::PublicKey::bits)
      .def("encrypt", [](const he::PublicKey& k, const py::int_& x) {
        return k.encrypt(to_big(x));
      })
      .def("add", &he::PublicKey::add)
      .def("mul_plain", [](const he::PublicKey& k, const he::Ciphertext& a,
                           const py::int_& c) { return k.mul_plain(a, to_big(c)); })
      .def("serialize", [](const he::PublicKey& k) {
        const Bytes b = k.serialize();
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  py::class_<he::PrivateKey>(m, "PrivateKey")
      .def_property_readonly("public_key", &he::PrivateKey::public_key)
      .def("encrypt", [](const he::PrivateKey& k, const py::int_& x) {
        return k.encrypt(to_big(x));
      })
      .def("decrypt", [](const he::PrivateKey& k, const he::Ciphertext& a) {
        return from_big(k.decrypt(a));
      });

  m.def(
      "generate_keypair",
      [](unsigned bits, bool allow_insecure) {
        he::KeygenOptions opt;
        opt.bits = bits;
        opt.allow_insecure = allow_insecure;
        he::KeyPair kp = [&] {
          py::gil_scoped_release release;
          return he::generate_keypair(opt);
        }();
        return py::make_tuple(kp.public_key, kp.private_key);
      },
      py::arg("bits") = he::kMinSecureKeyBits, py::arg("allow_insecure") = false);

  // ---- encoding ----
  py::class_<encoding::EncryptedNumber>(m, "EncryptedNumber")
      .def_readonly("exponent", &encoding::EncryptedNumber::exponent);

  py::class_<encoding::FloatCodec>(m, "FloatCodec")
      .def(py::init<he::PublicKey, unsigned>(), py::arg("public_key"),
           py::arg("base") = encoding::kDefaultBase)
      .def_property_readonly("base", &encoding::FloatCodec::base)
      .def("encode",
           [](const encoding::FloatCodec& c, double q) {
             const auto e = c.encode(q);
             return py::make_tuple(from_big(e.significand), e.exponent);
           })
      .def("decode",
           [](const encoding::FloatCodec& c, const py::int_& s, std::int64_t e) {
             return c.decode({to_big(s), e});
           })
      .def("encrypt", [](const encoding::FloatCodec& c, double q) { return c.encrypt(q); })
      .def("decrypt", &encoding::FloatCodec::decrypt)
      .def("add", &encoding::FloatCodec::add)
      .def("mul_plain", [](const encoding::FloatCodec& c,
                           const encoding::EncryptedNumber& a,
                           double k) { return c.mul_plain(a, k); });

  // ---- linkage ----
  py::class_<linkage::ClkConfig>(m, "ClkConfig")
      .def(py::init<>())
      .def_readwrite("l", &linkage::ClkConfig::l)
      .def_readwrite("k", &linkage::ClkConfig::k)
      .def_readwrite("n", &linkage::ClkConfig::n)
      .def_readwrite("fields", &linkage::ClkConfig::fields)
      .def_readwrite("secret", &linkage::ClkConfig::secret);

  py::class_<linkage::Clk>(m, "Clk")
      .def_property_readonly("size", &linkage::Clk::size)
      .def_property_readonly("popcount", &linkage::Clk::popcount)
      .def("test", &linkage::Clk::test)
      .def("hex", &linkage::Clk::to_hex)
      .def("__eq__", [](const linkage::Clk& a, const linkage::Clk& b) { return a == b; });

  m.def("build_clk", &linkage::build_clk, py::arg("record"), py::arg("config"));
  m.def("dice", &linkage::dice);

  py::class_<linkage::Linkage>(m, "Linkage")
      .def_readonly("sigma", &linkage::Linkage::sigma)
      .def_readonly("tau", &linkage::Linkage::tau)
      .def_readonly("mask", &linkage::Linkage::mask)
      .def_readonly("scores", &linkage::Linkage::scores)
      .def("matches", &linkage::Linkage::matches)
      .def("__len__", &linkage::Linkage::size);

  m.def(
      "match",
      [](const std::vector<linkage::Clk>& a, const std::vector<linkage::Clk>& b,
         double threshold, std::uint64_t seed) {
        py::gil_scoped_release release;
        return linkage::match(a, b, threshold, seed);
      },
      py::arg("a"), py::arg("b"), py::arg("threshold"), py::arg("seed") = 0);

  // ---- learn ----
  py::enum_<learn::LossKind>(m, "LossKind")
      .value("Taylor", learn::LossKind::Taylor)
      .value("Logistic", learn::LossKind::Logistic);

  py::class_<learn::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("eta", &learn::TrainConfig::eta)
      .def_readwrite("gamma", &learn::TrainConfig::gamma)
      .def_readwrite("batch", &learn::TrainConfig::batch)
      .def_readwrite("holdout", &learn::TrainConfig::holdout)
      .def_readwrite("patience", &learn::TrainConfig::patience)
      .def_readwrite("min_delta", &learn::TrainConfig::min_delta)
      .def_readwrite("max_epochs", &learn::TrainConfig::max_epochs)
      .def_readwrite("seed", &learn::TrainConfig::seed)
      .def_readwrite("loss", &learn::TrainConfig::loss);

  m.def(
      "train_sag",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
         const learn::TrainConfig& cfg, const Eigen::VectorXd& mask) {
        const learn::TrainResult r = learn::train_sag(X, y, cfg, mask);
        py::list trace;
        for (const auto& t : r.trace) {
          py::dict d;
          d["epoch"] = t.epoch;
          d["train_taylor"] = t.train_taylor;
          d["holdout_taylor"] = t.holdout_taylor;
          d["holdout_logistic"] = t.holdout_logistic;
          trace.append(d);
        }
        py::dict out;
        out["theta"] = r.theta;
        out["epochs"] = r.epochs;
        out["early_stopped"] = r.early_stopped;
        out["trace"] = trace;
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("config") = learn::TrainConfig{},
      py::arg("mask") = Eigen::VectorXd());

  m.def("closed_form_minimizer",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double gamma) {
          return learn::closed_form_minimizer(X, y, gamma);
        });
  m.def("evaluate", [](const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y) {
    return metrics_dict(learn::evaluate(theta, X, y));
  });

  // ---- audit ----
  m.def("hypergeometric_cdf", &protocol::hypergeometric_cdf,
        py::arg("population"), py::arg("successes"), py::arg("draws"), py::arg("k"));

  // ---- theory ----
  m.def(
      "drift_recurrence",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t d_anchor,
         const std::vector<std::pair<std::size_t, std::size_t>>& swaps,
         double gamma) {
        const auto r = theory::drift_recurrence(X, y, d_anchor,
                                                factorization(swaps, y), gamma);
        py::dict out;
        out["recurrence"] = r.recurrence;
        out["direct"] = r.direct;
        out["max_step_error"] = r.max_step_error;
        out["max_c"] = r.max_c;
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("d_anchor"), py::arg("swaps"),
      py::arg("gamma"));

  m.def(
      "check_theorem1",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t d_anchor,
         const std::vector<std::pair<std::size_t, std::size_t>>& swaps,
         double gamma, double alpha, std::size_t directions, std::uint64_t seed) {
        theory::CheckOptions opt{alpha, directions, seed};
        const auto r = theory::check_theorem1(X, y, d_anchor,
                                              factorization(swaps, y), gamma, {}, opt);
        py::dict out;
        out["assumptions_hold"] = r.assumptions.hold();
        out["xi"] = r.assumptions.accuracy.xi;
        out["ratio"] = r.ratio;
        out["bound_T2"] = r.bound_T2;
        out["bound_alpha"] = r.bound_alpha;
        out["bound_holds"] = r.bound_holds;
        out["report"] = theory::format(r);
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("d_anchor"), py::arg("swaps"),
      py::arg("gamma"), py::arg("alpha") = 0.5, py::arg("directions") = 10000,
      py::arg("seed") = 0);

  // ---- pipeline ----
  m.def(
      "run",
      [](const std::string& mode, std::size_t rows, double overlap,
         std::uint64_t seed, unsigned key_bits, bool allow_insecure,
         std::size_t epochs, const std::string& dataset) {
        pipeline::RunConfig cfg;
        cfg.mode = pipeline::parse_mode(mode);
        cfg.synthetic_rows = rows;
        cfg.split.overlap = overlap;
        cfg.seed = seed;
        cfg.key_bits = key_bits;
        cfg.allow_insecure = allow_insecure;
        cfg.train.max_epochs = epochs;
        cfg.dataset = dataset;
        pipeline::RunReport r;
        {
          py::gil_scoped_release release;
          r = pipeline::run(cfg);
        }
        py::dict out;
        out["mode"] = pipeline::to_string(r.mode);
        out["common"] = r.common;
        out["matches"] = r.matches;
        out["matching_error"] = r.matching_error;
        out["recall"] = r.recall;
        out["model"] = metrics_dict(r.model);
        out["baseline"] = metrics_dict(r.baseline);
        out["delta"] = metrics_dict(r.delta);
        out["epochs"] = r.epochs;
        out["theta"] = r.theta;
        out["gradient_ciphertexts"] = r.gradient_ciphertexts;
        out["expected_gradient_ciphertexts"] = r.expected_gradient_ciphertexts;
        out["leak_findings"] = r.leak_findings;
        out["aborted"] = r.aborted;
        out["assumptions_hold"] = r.assumptions_hold;
        out["text"] = pipeline::format_text(r);
        return out;
      },
      py::arg("mode") = "plaintext", py::arg("rows") = 5000,
      py::arg("overlap") = 1.0, py::arg("seed") = 1, py::arg("key_bits") = 1024,
      py::arg("allow_insecure") = false, py::arg("epochs") = 20,
      py::arg("dataset") = "");
}
