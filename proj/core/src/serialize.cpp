#include "qlink/serialize.hpp"

#include "qlink/errors.hpp"

namespace qlink {

using nlohmann::json;

json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

json to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(to_json(m(r, c)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

json to_json(const Vector& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(to_json(v(i)));
  return data;
}

json to_json(const HilbertFactorization& space) { return space.factors(); }

json to_json(const KrausChannel& ch) {
  json ops = json::array();
  for (const Matrix& k : ch.operators()) ops.push_back(to_json(k));
  return {{"input", to_json(ch.input_space())}, {"output", to_json(ch.output_space())}, {"operators", std::move(ops)}};
}

json to_json(const ClassicalZeroErrorCode& code) {
  json words = json::array();
  for (const StateVector& c : code.codewords) words.push_back(to_json(c.amplitudes()));
  return {{"size", code.size()},   {"rate", code.rate()},         {"size_bound", code.size_bound()},
          {"uses", code.uses},     {"carrier_dim", code.carrier_dim}, {"env_dim", code.env_dim},
          {"codewords", std::move(words)}};
}

json to_json(const QuantumZeroErrorCode& code) {
  json basis = json::array();
  for (const StateVector& q : code.basis) basis.push_back(to_json(q.amplitudes()));
  return {{"size", code.size()},
          {"rate", code.rate()},
          {"loose_size_bound", code.loose_size_bound()},
          {"tight_size_bound", code.tight_size_bound()},
          {"shared_matrix", to_json(code.shared_matrix)},
          {"basis", std::move(basis)}};
}

json to_json(const SpectralReport& report) {
  json vals = json::array();
  for (Complex z : report.eigenvalues) vals.push_back(to_json(z));
  return {{"eigenvalues", std::move(vals)},
          {"gap", report.gap},
          {"fixed_point_purity", report.fixed_point_purity},
          {"fixed_points", report.fixed_points.size()},
          {"is_mixing", report.is_mixing}};
}

json to_json(const ProtocolRun& run) {
  return {{"input", to_json(run.input)},
          {"eta0", run.eta0},
          {"pi_n", run.pi_n},
          {"p_list", run.p_list},
          {"schmidt_coefficients", run.schmidt_coefficients},
          {"schmidt_ground_overlap", run.schmidt_ground_overlap},
          {"decomposition_residual", run.decomposition_residual}};
}

json to_json(const RateReport& report) {
  return {{"mode", to_string(report.mode)},
          {"epsilon", report.epsilon},
          {"n1", report.n1},
          {"teleport_ebits", report.teleport_ebits},
          {"teleport_cbits", report.teleport_cbits},
          {"first_round_rate", report.first_round_rate},
          {"retry_rate_sequence", report.retry_rate_sequence},
          {"asymptotic_rate", report.asymptotic_rate}};
}

Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw PreconditionError("complex_from_json: expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (data.size() != static_cast<std::size_t>(rows * cols)) throw DimensionError("matrix_from_json: entry count");
  Matrix m(rows, cols);
  std::size_t t = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(data[t++]);
  }
  return m;
}

HilbertFactorization space_from_json(const json& j) {
  return HilbertFactorization(j.get<std::vector<std::size_t>>());
}

KrausChannel channel_from_json(const json& j) {
  std::vector<Matrix> ops;
  for (const json& k : j.at("operators")) ops.push_back(matrix_from_json(k));
  return KrausChannel(std::move(ops), space_from_json(j.at("input")), space_from_json(j.at("output")),
                      PruneZeros::kNo);
}

}  // namespace qlink
