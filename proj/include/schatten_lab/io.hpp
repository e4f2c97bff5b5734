#pragma once

// JSON documents: recovery instances (JSON header line followed by matrices in
// the text format) and alignment traces.

#include <istream>
#include <json.hpp>
#include <ostream>
#include <string>

#include "schatten_lab/alignment.hpp"
#include "schatten_lab/recovery.hpp"
#include "schatten_lab/verifier.hpp"

namespace schatten {

/// Header line {"schema","m","n","l","p","eta","seed","ground_truth"}, then the
/// l x mn operator, then y as an l x 1 matrix, then the ground truth if present.
inline void write_instance(std::ostream& out, const RecoveryInstance& inst, std::uint64_t seed) {
  nlohmann::ordered_json header{{"schema", "schatten-lab v1"},
                                {"m", inst.op.m},
                                {"n", inst.op.n},
                                {"l", inst.op.l()},
                                {"p", inst.p},
                                {"eta", inst.eta},
                                {"seed", seed},
                                {"ground_truth", inst.ground_truth.has_value()}};
  out << header.dump() << '\n';
  write_matrix(out, inst.op.matrix);
  Matrix y(inst.y.size(), 1);
  y.set_col(0, inst.y);
  write_matrix(out, y);
  if (inst.ground_truth) write_matrix(out, *inst.ground_truth);
}

struct LoadedInstance {
  RecoveryInstance instance;
  std::uint64_t seed = 0;
};

inline LoadedInstance read_instance(std::istream& in) {
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), "read_instance: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("read_instance: bad header: ") + e.what());
  }
  try {
    const auto m = header.at("m").get<std::size_t>();
    const auto n = header.at("n").get<std::size_t>();
    const auto l = header.at("l").get<std::size_t>();
    Matrix a = read_matrix(in);
    detail::require(a.rows() == l && a.cols() == m * n, "read_instance: operator shape disagrees with header");
    Matrix y = read_matrix(in);
    detail::require(y.rows() == l && y.cols() == 1, "read_instance: y must be l x 1");
    LoadedInstance out;
    out.instance.op = MeasurementOperator(std::move(a), m, n);
    out.instance.y.assign(y.data().begin(), y.data().end());
    out.instance.p = header.at("p").get<double>();
    out.instance.eta = header.at("eta").get<double>();
    out.seed = header.value("seed", std::uint64_t{0});
    if (header.value("ground_truth", false)) {
      Matrix truth = read_matrix(in);
      detail::require(truth.rows() == m && truth.cols() == n, "read_instance: ground truth shape disagrees with header");
      out.instance.ground_truth = std::move(truth);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("read_instance: bad header field: ") + e.what());
  }
}

inline nlohmann::ordered_json alignment_trace_json(const AlignmentState& state) {
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& e : state.trace)
    trace.push_back({{"iter", e.iter}, {"objective", e.objective}, {"commutator_norm", e.commutator_norm},
                     {"step", e.step}});
  return trace;
}

}  // namespace schatten
