#pragma once

// JSON serialization of models and run reports (nlohmann::json).
// Matrices are stored column-major as {"rows", "cols", "values"}, tensors as
// {"dims", "values"} in the DenseTensor3 layout.

#include "btd/asu.hpp"
#include "btd/split.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace btd::harness {

using json = nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"values", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const json& j) {
  const Index r = j.at("rows").get<Index>(), c = j.at("cols").get<Index>();
  const auto v = j.at("values").get<std::vector<double>>();
  if (r < 0 || c < 0 || static_cast<Index>(v.size()) != r * c)
    throw std::invalid_argument("matrix JSON: value count does not match shape");
  return Eigen::Map<const Matrix>(v.data(), r, c);
}

inline json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline json tensor_to_json(const DenseTensor3& t) {
  return {{"dims", std::vector<Index>(t.dims().begin(), t.dims().end())},
          {"values", vector_to_json(t.values())}};
}

inline DenseTensor3 tensor_from_json(const json& j) {
  const auto d = j.at("dims").get<std::vector<Index>>();
  if (d.size() != 3)
    throw std::invalid_argument("tensor JSON: need three dims");
  return DenseTensor3({d[0], d[1], d[2]}, vector_from_json(j.at("values")));
}

inline json factors_to_json(const FactorSet& f) {
  return json::array({matrix_to_json(f[0]), matrix_to_json(f[1]), matrix_to_json(f[2])});
}

inline FactorSet factors_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument("factors JSON: need three matrices");
  return {matrix_from_json(j[0]), matrix_from_json(j[1]), matrix_from_json(j[2])};
}

inline json tucker_to_json(const TuckerBlock& b) {
  return {{"core", tensor_to_json(b.core)}, {"factors", factors_to_json(b.factors)}};
}

inline TuckerBlock tucker_from_json(const json& j) {
  TuckerBlock b{tensor_from_json(j.at("core")), factors_from_json(j.at("factors"))};
  b.validate();
  return b;
}

inline json pair_to_json(const BlockPairModel& p) {
  return {{"kind", "block_pair"}, {"blockG", tucker_to_json(p.blockG)}, {"blockH", tucker_to_json(p.blockH)}};
}

inline BlockPairModel pair_from_json(const json& j) {
  if (j.value("kind", "") != "block_pair")
    throw std::invalid_argument("model JSON: expected kind \"block_pair\"");
  BlockPairModel p{tucker_from_json(j.at("blockG")), tucker_from_json(j.at("blockH"))};
  p.validate();
  return p;
}

inline json kruskal_to_json(const KruskalModel& m) {
  return {{"kind", "kruskal"}, {"weights", vector_to_json(m.weights)}, {"factors", factors_to_json(m.factors)}};
}

inline KruskalModel kruskal_from_json(const json& j) {
  if (j.value("kind", "") != "kruskal")
    throw std::invalid_argument("model JSON: expected kind \"kruskal\"");
  KruskalModel m{vector_from_json(j.at("weights")), factors_from_json(j.at("factors"))};
  m.validate();
  return m;
}

inline json terms_to_json(const std::vector<Rank1Term>& terms) {
  json arr = json::array();
  for (const auto& t : terms)
    arr.push_back({{"weight", t.weight},
                   {"vectors", json::array({vector_to_json(t.vectors[0]), vector_to_json(t.vectors[1]),
                                            vector_to_json(t.vectors[2])})}});
  return {{"kind", "rank1_terms"}, {"terms", arr}};
}

inline std::vector<Rank1Term> terms_from_json(const json& j) {
  std::vector<Rank1Term> out;
  for (const auto& e : j.at("terms")) {
    Rank1Term t;
    t.weight = e.at("weight").get<double>();
    for (int n = 0; n < 3; ++n)
      t.vectors[n] = vector_from_json(e.at("vectors").at(n));
    out.push_back(std::move(t));
  }
  return out;
}

struct TraceEntry {
  int iteration = 0;
  double cost = 0;
  double rel_error = 0;
  double seconds = 0;
};

struct RunReport {
  std::string algo;
  json config = json::object();
  std::vector<TraceEntry> trace;
  std::array<std::vector<double>, 3> sigma;
  double final_rel_error = 0;
  int iterations = 0;
  bool converged = false;
  double seconds = 0;
  json metrics = json::object();
};

inline json report_to_json(const RunReport& r) {
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iteration", t.iteration}, {"cost", t.cost}, {"rel_error", t.rel_error},
                     {"seconds", t.seconds}});
  return {{"algo", r.algo},
          {"config", r.config},
          {"trace", trace},
          {"summary",
           {{"sigma", r.sigma},
            {"final_rel_error", r.final_rel_error},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"seconds", r.seconds}}},
          {"metrics", r.metrics}};
}

inline RunReport report_from_json(const json& j) {
  RunReport r;
  r.algo = j.at("algo").get<std::string>();
  r.config = j.at("config");
  for (const auto& t : j.at("trace"))
    r.trace.push_back({t.at("iteration").get<int>(), t.at("cost").get<double>(),
                       t.at("rel_error").get<double>(), t.at("seconds").get<double>()});
  const json& s = j.at("summary");
  r.sigma = s.at("sigma").get<std::array<std::vector<double>, 3>>();
  r.final_rel_error = s.at("final_rel_error").get<double>();
  r.iterations = s.at("iterations").get<int>();
  r.converged = s.at("converged").get<bool>();
  r.seconds = s.at("seconds").get<double>();
  r.metrics = j.at("metrics");
  return r;
}

inline bool operator==(const TraceEntry& a, const TraceEntry& b) {
  return a.iteration == b.iteration && a.cost == b.cost && a.rel_error == b.rel_error &&
         a.seconds == b.seconds;
}

inline bool operator==(const RunReport& a, const RunReport& b) {
  return a.algo == b.algo && a.config == b.config && a.trace == b.trace && a.sigma == b.sigma &&
         a.final_rel_error == b.final_rel_error && a.iterations == b.iterations &&
         a.converged == b.converged && a.seconds == b.seconds && a.metrics == b.metrics;
}

} // namespace btd::harness
