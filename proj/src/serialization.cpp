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
#include "motr/serialization.hpp"

namespace motr {

Json matrix_to_json(const MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatrixXd matrix_from_json(const Json& j, const std::string& path) {
  const auto rows = get_field<Eigen::Index>(j, "rows", path);
  const auto cols = get_field<Eigen::Index>(j, "cols", path);
  const auto data = get_field<std::vector<double>>(j, "data", path);
  if (rows < 0 || cols < 0) throw ConfigError(path, "negative dimension");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError(path + ".data", "expected " + std::to_string(rows * cols) +
                                          " entries, got " +
                                          std::to_string(data.size()));
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[i * cols + k];
  return m;
}

Json vector_to_json(const VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

VectorXd vector_from_json(const Json& j, const std::string& path) {
  std::vector<double> data;
  try {
    data = j.get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  }
  return Eigen::Map<const VectorXd>(data.data(), data.size());
}

Json system_to_json(const LinearSystem& sys) {
  return {{"d_x", sys.state_dim()},
          {"d_u", sys.control_dim()},
          {"d_w", sys.disturbance_dim()},
          {"A", matrix_to_json(sys.A())},
          {"B", matrix_to_json(sys.B())},
          {"C", matrix_to_json(sys.C())}};
}

LinearSystem system_from_json(const Json& j, const std::string& path) {
  const int dx = get_field<int>(j, "d_x", path);
  const int du = get_field<int>(j, "d_u", path);
  const int dw = get_field<int>(j, "d_w", path);
  MatrixXd A = matrix_from_json(get_field<Json>(j, "A", path), path + ".A");
  MatrixXd B = matrix_from_json(get_field<Json>(j, "B", path), path + ".B");
  MatrixXd C = matrix_from_json(get_field<Json>(j, "C", path), path + ".C");
  if (A.rows() != dx || A.cols() != dx) throw ConfigError(path + ".A", "expected d_x x d_x");
  if (B.rows() != dx || B.cols() != du) throw ConfigError(path + ".B", "expected d_x x d_u");
  if (C.rows() != dx || C.cols() != dw) throw ConfigError(path + ".C", "expected d_x x d_w");
  try {
    return LinearSystem(std::move(A), std::move(B), std::move(C));
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
}

Json cost_to_json(const CostWeights& cw) {
  return {{"Q", matrix_to_json(cw.Q())}, {"R", matrix_to_json(cw.R())}};
}

CostWeights cost_from_json(const Json& j, const std::string& path) {
  try {
    return CostWeights(
        matrix_from_json(get_field<Json>(j, "Q", path), path + ".Q"),
        matrix_from_json(get_field<Json>(j, "R", path), path + ".R"));
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
}

Json lqr_to_json(const LqrSolution& sol) {
  return {{"P", matrix_to_json(sol.P)},
          {"K", matrix_to_json(sol.K)},
          {"iterations", sol.iterations}};
}

Json hinf_to_json(const HinfSolution& sol) {
  return {{"P", matrix_to_json(sol.P)},
          {"K", matrix_to_json(sol.K)},
          {"W", matrix_to_json(sol.W)},
          {"gamma_star", sol.gamma_star}};
}

TrustRegionProblem tr_problem_from_json(const Json& j, const std::string& path) {
  MatrixXd P = matrix_from_json(get_field<Json>(j, "P", path), path + ".P");
  VectorXd p = vector_from_json(get_field<Json>(j, "p", path), path + ".p");
  const double D = get_field<double>(j, "D", path);
  try {
    return TrustRegionProblem(std::move(P), std::move(p), D);
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
}

Json tr_solution_to_json(const TrustRegionSolution& sol) {
  return {{"z", vector_to_json(sol.z)},
          {"value", sol.value},
          {"multiplier", sol.multiplier},
          {"on_boundary", sol.on_boundary},
          {"hard_case", sol.hard_case}};
}

}  // namespace motr
