#pragma once

// One solver run plus the rank-1 split of its extracted block.

#include "btd/als.hpp"
#include "btd/asu.hpp"
#include "btd/split.hpp"

#include <string>

namespace btd::harness {

/// asu1 is the K = 1 limit of the same solver (rank-1 deflation).
enum class Algo { asu, als, asu1 };

inline std::string algo_name(Algo a) {
  switch (a) {
  case Algo::asu: return "asu";
  case Algo::als: return "als";
  default: return "asu1";
  }
}

inline Algo parse_algo(const std::string& s) {
  if (s == "asu")
    return Algo::asu;
  if (s == "als")
    return Algo::als;
  if (s == "asu1")
    return Algo::asu1;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected asu, als or asu1)");
}

inline Index block_size_of(Algo a) { return a == Algo::asu1 ? 1 : 2; }

struct SolveOutcome {
  BlockPairModel model;
  std::vector<IterationRecord> trace;
  std::array<Vector, 3> sigma;
  int iterations = 0;
  bool converged = false;
  double final_rel_error = 0;
  double seconds = 0;
  std::vector<Rank1Term> terms;
  bool split_ok = false;
  std::string split_error;
};

inline SolveOutcome solve(const DenseTensor3& y, const BlockPairModel& init, Algo algo,
                          const AsuConfig& cfg) {
  using clock = std::chrono::steady_clock;
  if (init.block_size() != block_size_of(algo))
    throw std::invalid_argument("solve: init block size does not match the algorithm");
  SolveOutcome out;
  const auto t0 = clock::now();
  if (algo == Algo::als) {
    AlsResult r = btd_als_run(y, init, cfg);
    out.model = std::move(r.model);
    out.trace = std::move(r.trace);
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.final_rel_error = r.final_rel_error;
  } else {
    AsuResult r = asu_run(y, init, cfg);
    out.model = std::move(r.model);
    out.trace = std::move(r.trace);
    out.sigma = r.sigma;
    out.iterations = r.iterations;
    out.converged = r.converged || r.stalled;
    out.final_rel_error = r.final_rel_error;
  }
  out.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  try {
    out.terms = split_block(out.model, cfg.seed).terms;
    out.split_ok = true;
  } catch (const NumericalError& e) {
    out.split_error = e.what();
  }
  return out;
}

} // namespace btd::harness
