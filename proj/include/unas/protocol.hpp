// Copyright 2026 The unas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Evaluator wire protocol: one JSON object per line in each direction.
//
// request:  {"architecture": {...}, "genome": "...", "lambda": 100.0,
//            "train_budget": {"mini_epochs": 1, "batch_size": 1},
//            "dataset": {"train_path": "...", "val_path": "..."},
//            "seed": 123}
// response: {"l_gan": 0.7, "l_l1": 0.002, "status": "ok", "message": ""}
//
// Loss values are per-image means over the validation pass. Bare NaN and
// Infinity tokens (as emitted by Python's json module) are accepted on input
// so they can be reported as non-finite losses rather than syntax errors.

#ifndef UNAS_PROTOCOL_HPP_
#define UNAS_PROTOCOL_HPP_

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "unas/decoder.hpp"

namespace unas {

struct TrainBudget {
  int mini_epochs = 1;
  int batch_size = 1;

  friend bool operator==(const TrainBudget&, const TrainBudget&) = default;
};

struct DatasetPaths {
  std::string train_path;
  std::string val_path;

  friend bool operator==(const DatasetPaths&, const DatasetPaths&) = default;
};

struct EvalRequest {
  Json architecture;
  std::string genome;
  double lambda = 100.0;
  TrainBudget train_budget;
  DatasetPaths dataset;
  std::uint64_t seed = 0;
};

enum class EvalStatus { kOk, kFailed };

struct EvalResponse {
  double l_gan = 0.0;
  double l_l1 = 0.0;
  EvalStatus status = EvalStatus::kOk;
  std::string message;

  bool ok() const { return status == EvalStatus::kOk; }

  static EvalResponse failure(std::string message) {
    return EvalResponse{0.0, 0.0, EvalStatus::kFailed, std::move(message)};
  }

  friend bool operator==(const EvalResponse&, const EvalResponse&) = default;
};

inline Json request_to_json(const EvalRequest& r) {
  return Json{{"architecture", r.architecture},
              {"genome", r.genome},
              {"lambda", r.lambda},
              {"train_budget",
               {{"mini_epochs", r.train_budget.mini_epochs},
                {"batch_size", r.train_budget.batch_size}}},
              {"dataset",
               {{"train_path", r.dataset.train_path},
                {"val_path", r.dataset.val_path}}},
              {"seed", r.seed}};
}

inline EvalRequest request_from_json(const Json& j) {
  try {
    EvalRequest r;
    r.architecture = j.at("architecture");
    r.genome = j.at("genome").get<std::string>();
    r.lambda = j.at("lambda").get<double>();
    r.train_budget.mini_epochs = j.at("train_budget").at("mini_epochs").get<int>();
    r.train_budget.batch_size = j.at("train_budget").at("batch_size").get<int>();
    r.dataset.train_path = j.at("dataset").at("train_path").get<std::string>();
    r.dataset.val_path = j.at("dataset").at("val_path").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (r.lambda < 0 || r.train_budget.mini_epochs < 1) {
      throw Error(ErrorCode::kInvalidDocument,
                  "request needs lambda >= 0 and mini_epochs >= 1");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidDocument, e.what());
  }
}

inline Json response_to_json(const EvalResponse& r) {
  // Non-finite losses are written as strings to stay valid JSON.
  auto number = [](double v) -> Json {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "NaN" : (v > 0 ? "Infinity" : "-Infinity");
  };
  return Json{{"l_gan", number(r.l_gan)},
              {"l_l1", number(r.l_l1)},
              {"status", r.ok() ? "ok" : "failed"},
              {"message", r.message}};
}

namespace detail {

/// Quotes bare NaN / Infinity / -Infinity tokens that sit outside strings.
inline std::string quote_nonfinite_tokens(std::string_view line) {
  std::string out;
  out.reserve(line.size() + 8);
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < line.size()) {
        out += line[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    bool replaced = false;
    for (std::string_view token : {"-Infinity", "Infinity", "NaN"}) {
      if (line.substr(i, token.size()) == token) {
        out += '"';
        out += token;
        out += '"';
        i += token.size() - 1;
        replaced = true;
        break;
      }
    }
    if (!replaced) out += c;
  }
  return out;
}

inline std::optional<double> loss_value(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "NaN" || s == "nan") return std::nan("");
    if (s == "Infinity" || s == "inf") return HUGE_VAL;
    if (s == "-Infinity" || s == "-inf") return -HUGE_VAL;
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses and validates one response line. Protocol violations come back as
/// failed responses whose message starts with the failure kind
/// ("malformed-response", "non-finite-loss"); this never throws.
inline EvalResponse parse_response_line(std::string_view line) {
  Json j;
  try {
    j = Json::parse(detail::quote_nonfinite_tokens(line));
  } catch (const nlohmann::json::exception&) {
    return EvalResponse::failure("malformed-response: not a JSON record: '" +
                                 std::string(line.substr(0, 200)) + "'");
  }
  if (!j.is_object() || !j.contains("status") || !j.at("status").is_string()) {
    return EvalResponse::failure("malformed-response: missing 'status'");
  }
  const std::string status = j.at("status").get<std::string>();
  std::string message;
  if (j.contains("message") && j.at("message").is_string()) {
    message = j.at("message").get<std::string>();
  }
  if (status == "failed") {
    return EvalResponse::failure("evaluator-failed: " + message);
  }
  if (status != "ok") {
    return EvalResponse::failure("malformed-response: unknown status '" +
                                 status + "'");
  }
  if (!j.contains("l_gan") || !j.contains("l_l1")) {
    return EvalResponse::failure("malformed-response: missing loss fields");
  }
  const auto l_gan = detail::loss_value(j.at("l_gan"));
  const auto l_l1 = detail::loss_value(j.at("l_l1"));
  if (!l_gan || !l_l1) {
    return EvalResponse::failure("malformed-response: losses must be numbers");
  }
  if (!std::isfinite(*l_gan) || !std::isfinite(*l_l1)) {
    return EvalResponse::failure("non-finite-loss: l_gan=" + std::to_string(*l_gan) +
                                 " l_l1=" + std::to_string(*l_l1));
  }
  if (*l_l1 < 0) {
    return EvalResponse::failure("malformed-response: l_l1 is negative");
  }
  return EvalResponse{*l_gan, *l_l1, EvalStatus::kOk, message};
}

/// Exact inverse of response_to_json, used for records the engine wrote
/// itself (checkpoints). No protocol validation.
inline EvalResponse response_from_json(const Json& j) {
  EvalResponse r;
  r.l_gan = detail::loss_value(j.at("l_gan")).value_or(std::nan(""));
  r.l_l1 = detail::loss_value(j.at("l_l1")).value_or(std::nan(""));
  r.status = j.at("status") == "ok" ? EvalStatus::kOk : EvalStatus::kFailed;
  r.message = j.at("message").get<std::string>();
  return r;
}

}  // namespace unas

#endif  // UNAS_PROTOCOL_HPP_
