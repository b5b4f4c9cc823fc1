/*
 Copyright 2026 The motr-bench Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

// JSON forms of the domain types. Matrices are objects
//   {"rows": r, "cols": c, "data": [row-major entries]}.

#include <string>

#include "json.hpp"
#include "motr/common.hpp"
#include "motr/controllers.hpp"
#include "motr/lds_core.hpp"
#include "motr/trust_region.hpp"

namespace motr {

using Json = nlohmann::json;

/// Malformed input document; `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j, const std::string& path);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j, const std::string& path);

Json system_to_json(const LinearSystem& sys);
LinearSystem system_from_json(const Json& j, const std::string& path = "system");

Json cost_to_json(const CostWeights& cw);
CostWeights cost_from_json(const Json& j, const std::string& path = "cost");

Json lqr_to_json(const LqrSolution& sol);
Json hinf_to_json(const HinfSolution& sol);

TrustRegionProblem tr_problem_from_json(const Json& j,
                                        const std::string& path = "problem");
Json tr_solution_to_json(const TrustRegionSolution& sol);

/// Fetches j[key] as T, with the field path in any error.
template <typename T>
T get_field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::string field = path.empty() ? key : path + "." + key;
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(field, "missing field");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

template <typename T>
T get_field_or(const Json& j, const std::string& key, const std::string& path,
               T fallback) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, key, path);
}

}  // namespace motr
