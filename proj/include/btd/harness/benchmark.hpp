#pragma once

// Benchmark sweeps: a grid over (R, c, rho, SNR) with seeded trials, paired
// solver runs from a shared initialization, and CSV output.
//
// Config grammar (one setting per line, '#' starts a comment):
//
//   key = value [, value ...]
//
//   ranks       = 10                 grid, integers >= 4
//   collinearity = 0, 0.1, 0.2       grid, [0, 1)
//   rho         = none, 0.98         grid, "none" or [c, 1)
//   rho_modes   = 1                  1-based modes that receive rho
//   snr_db      = 30                 grid, number or "inf"
//   trials      = 20
//   seed        = 1                  master seed
//   algos       = asu, als           asu | als | asu1
//   init        = gevd               gevd | random | truth
//   pair        = auto               auto | i,j (1-based)
//   tol         = 1e-6
//   max_iters   = 1000
//   stiefel_steps = 20
//   mode_passes = 3
//
// Row CSV columns:
//   run_id,algo,R,c,rho,snr_db,seed,component,sae_db,iters,seconds,final_rel_err,converged
// with one row per (trial, algorithm, estimated component, mode). `component`
// is "<truth index>:<mode>" (both 1-based); the truth index is 0 when the
// block could not be split. Summary CSV columns:
//   algo,R,c,rho,snr_db,trials,items,medsae_db,mean_sae_db,mean_iters,total_seconds,converged_frac

#include "btd/harness/init.hpp"
#include "btd/harness/solve.hpp"
#include "btd/synthetic.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace btd::harness {

struct BenchmarkConfig {
  std::vector<Index> ranks{10};
  std::vector<double> collinearity{0.0};
  std::vector<std::optional<double>> rho{std::nullopt};
  std::vector<int> rho_modes{0};
  std::vector<double> snr_db{30.0};
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<Algo> algos{Algo::asu, Algo::als};
  InitStrategy init = InitStrategy::gevd;
  std::optional<std::array<Index, 2>> pair;
  AsuConfig solver;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(trim(item));
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  if (s == "inf" || s == "+inf")
    return std::numeric_limits<double>::infinity();
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw std::invalid_argument("config: '" + key + "' expects numbers, got '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& key) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw std::invalid_argument("config: '" + key + "' expects integers, got '" + s + "'");
  return v;
}

} // namespace detail

inline InitStrategy parse_init(const std::string& s) {
  if (s == "gevd")
    return InitStrategy::gevd;
  if (s == "random")
    return InitStrategy::random;
  if (s == "truth")
    return InitStrategy::truth;
  throw std::invalid_argument("unknown init strategy '" + s + "' (expected gevd, random or truth)");
}

inline std::string init_name(InitStrategy s) {
  switch (s) {
  case InitStrategy::gevd: return "gevd";
  case InitStrategy::random: return "random";
  default: return "truth";
  }
}

/// "auto" or "i,j" with 1-based indices.
inline std::optional<std::array<Index, 2>> parse_pair(const std::string& s) {
  if (detail::trim(s) == "auto")
    return std::nullopt;
  const auto parts = detail::split_list(s);
  if (parts.size() != 2)
    throw std::invalid_argument("pair must be 'auto' or 'i,j'");
  const long long i = detail::parse_int(parts[0], "pair"), j = detail::parse_int(parts[1], "pair");
  if (i < 1 || j < 1 || i == j)
    throw std::invalid_argument("pair indices must be distinct and 1-based");
  return std::array<Index, 2>{static_cast<Index>(i - 1), static_cast<Index>(j - 1)};
}

inline BenchmarkConfig parse_benchmark_config(const std::string& text) {
  BenchmarkConfig cfg;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos)
      line.resize(h);
    line = detail::trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const auto items = detail::split_list(val);
    auto single = [&]() -> const std::string& {
      if (items.size() != 1)
        throw std::invalid_argument("config: '" + key + "' takes a single value");
      return items[0];
    };
    if (key == "ranks") {
      cfg.ranks.clear();
      for (const auto& s : items)
        cfg.ranks.push_back(static_cast<Index>(detail::parse_int(s, key)));
    } else if (key == "collinearity") {
      cfg.collinearity.clear();
      for (const auto& s : items)
        cfg.collinearity.push_back(detail::parse_double(s, key));
    } else if (key == "rho") {
      cfg.rho.clear();
      for (const auto& s : items)
        cfg.rho.push_back(s == "none" ? std::nullopt : std::optional<double>(detail::parse_double(s, key)));
    } else if (key == "rho_modes") {
      cfg.rho_modes.clear();
      for (const auto& s : items)
        cfg.rho_modes.push_back(static_cast<int>(detail::parse_int(s, key)) - 1);
    } else if (key == "snr_db") {
      cfg.snr_db.clear();
      for (const auto& s : items)
        cfg.snr_db.push_back(detail::parse_double(s, key));
    } else if (key == "trials") {
      cfg.trials = static_cast<int>(detail::parse_int(single(), key));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::parse_int(single(), key));
    } else if (key == "algos") {
      cfg.algos.clear();
      for (const auto& s : items)
        cfg.algos.push_back(parse_algo(s));
    } else if (key == "init") {
      cfg.init = parse_init(single());
    } else if (key == "pair") {
      cfg.pair = parse_pair(val);
    } else if (key == "tol") {
      cfg.solver.tol = detail::parse_double(single(), key);
    } else if (key == "max_iters") {
      cfg.solver.max_iters = static_cast<int>(detail::parse_int(single(), key));
    } else if (key == "stiefel_steps") {
      cfg.solver.stiefel_steps = static_cast<int>(detail::parse_int(single(), key));
    } else if (key == "mode_passes") {
      cfg.solver.mode_passes = static_cast<int>(detail::parse_int(single(), key));
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (cfg.ranks.empty() || cfg.collinearity.empty() || cfg.rho.empty() || cfg.snr_db.empty() ||
      cfg.algos.empty())
    throw std::invalid_argument("config: every grid needs at least one value");
  for (Index r : cfg.ranks)
    if (r < 4)
      throw std::invalid_argument("config: ranks must be at least 4");
  if (cfg.trials < 1)
    throw std::invalid_argument("config: trials must be positive");
  cfg.solver.validate();
  return cfg;
}

/// SplitMix64 finalizer; derives independent trial seeds from the master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial) {
  return splitmix64(splitmix64(master ^ splitmix64(cell)) + trial);
}

struct BenchmarkRow {
  int run_id = 0;
  Algo algo = Algo::asu;
  Index rank = 0;
  double c = 0;
  std::optional<double> rho;
  double snr_db = 0;
  std::uint64_t seed = 0;
  Index truth_index = 0; ///< 1-based, 0 when unmatched
  int mode = 0;          ///< 1-based
  double sae_db = 0;
  int iters = 0;
  double seconds = 0;
  double final_rel_err = 0;
  bool converged = false;
};

struct SummaryRow {
  Algo algo = Algo::asu;
  Index rank = 0;
  double c = 0;
  std::optional<double> rho;
  double snr_db = 0;
  int trials = 0;
  size_t items = 0;
  double medsae_db = 0;
  double mean_sae_db = 0;
  double mean_iters = 0;
  double total_seconds = 0;
  double converged_frac = 0;
};

struct BenchmarkOptions {
  bool omit_timing = false; ///< write 0 for every time column
};

inline std::string fmt_num(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_header() {
  return "run_id,algo,R,c,rho,snr_db,seed,component,sae_db,iters,seconds,final_rel_err,converged\n";
}

inline std::string csv_row(const BenchmarkRow& r) {
  std::ostringstream o;
  o << r.run_id << ',' << algo_name(r.algo) << ',' << r.rank << ',' << fmt_num(r.c) << ','
    << (r.rho ? fmt_num(*r.rho) : "none") << ',' << fmt_num(r.snr_db) << ',' << r.seed << ','
    << r.truth_index << ':' << r.mode << ',' << fmt_num(r.sae_db) << ',' << r.iters << ','
    << fmt_num(r.seconds) << ',' << fmt_num(r.final_rel_err) << ',' << (r.converged ? 1 : 0) << '\n';
  return o.str();
}

inline std::string summary_header() {
  return "algo,R,c,rho,snr_db,trials,items,medsae_db,mean_sae_db,mean_iters,total_seconds,converged_frac\n";
}

inline std::string summary_row(const SummaryRow& s) {
  std::ostringstream o;
  o << algo_name(s.algo) << ',' << s.rank << ',' << fmt_num(s.c) << ','
    << (s.rho ? fmt_num(*s.rho) : "none") << ',' << fmt_num(s.snr_db) << ',' << s.trials << ','
    << s.items << ',' << fmt_num(s.medsae_db) << ',' << fmt_num(s.mean_sae_db) << ','
    << fmt_num(s.mean_iters) << ',' << fmt_num(s.total_seconds) << ',' << fmt_num(s.converged_frac)
    << '\n';
  return o.str();
}

/// -10 log10 of the median SAE, with SAE recovered from the dB values.
inline double medsae_db(const std::vector<double>& sae_db_values) {
  std::vector<double> s;
  s.reserve(sae_db_values.size());
  for (double d : sae_db_values)
    s.push_back(std::pow(10.0, -d / 10.0));
  return sae_to_db(median(s));
}

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<SummaryRow> summary;
};

/// Runs the grid sequentially; `on_row` sees every row as soon as it exists.
inline BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, const BenchmarkOptions& opt = {},
                                     const std::function<void(const BenchmarkRow&)>& on_row = {}) {
  BenchmarkResult res;
  int run_id = 0;
  std::uint64_t cell = 0;
  for (Index rank : cfg.ranks)
    for (double c : cfg.collinearity)
      for (const auto& rho : cfg.rho)
        for (double snr : cfg.snr_db) {
          struct Acc {
            std::vector<double> sae;
            double iters = 0, seconds = 0, conv = 0;
          };
          std::map<Algo, Acc> acc;
          for (int t = 0; t < cfg.trials; ++t) {
            ++run_id;
            const std::uint64_t seed = trial_seed(cfg.seed, cell, static_cast<std::uint64_t>(t));
            GeneratorConfig g;
            g.rank = rank;
            g.c = c;
            g.rho = rho;
            g.modes_with_rho = cfg.rho_modes;
            g.snr_db = snr;
            g.seed = seed;
            const SyntheticProblem prob = generate(g);
            AsuConfig sc = cfg.solver;
            sc.seed = seed;
            std::map<Index, Initialization> inits;
            for (Algo a : cfg.algos) {
              const Index k = block_size_of(a);
              if (!inits.count(k))
                inits.emplace(k, initialize(prob.tensor, cfg.init, cfg.pair, splitmix64(seed), k,
                                            &prob.truth));
              SolveOutcome out;
              bool numerical_failure = false;
              try {
                out = solve(prob.tensor, inits.at(k).model, a, sc);
              } catch (const NumericalError&) {
                numerical_failure = true;
              }
              std::vector<std::array<Vector, 3>> est;
              for (const auto& term : out.terms)
                est.push_back(term.vectors);
              std::vector<Index> matched;
              const auto sae = matched_sae_db(est, prob.truth, &matched, static_cast<size_t>(k));
              auto& a_acc = acc[a];
              a_acc.iters += out.iterations;
              a_acc.seconds += opt.omit_timing ? 0.0 : out.seconds;
              a_acc.conv += out.converged && !numerical_failure ? 1 : 0;
              for (size_t i = 0; i < sae.size(); ++i) {
                BenchmarkRow row;
                row.run_id = run_id;
                row.algo = a;
                row.rank = rank;
                row.c = c;
                row.rho = rho;
                row.snr_db = snr;
                row.seed = seed;
                row.truth_index = matched.empty() ? 0 : matched[i / 3] + 1;
                row.mode = static_cast<int>(i % 3) + 1;
                row.sae_db = sae[i];
                row.iters = out.iterations;
                row.seconds = opt.omit_timing ? 0.0 : out.seconds;
                row.final_rel_err = numerical_failure ? std::numeric_limits<double>::quiet_NaN()
                                                      : out.final_rel_error;
                row.converged = out.converged && !numerical_failure;
                a_acc.sae.push_back(sae[i]);
                if (on_row)
                  on_row(row);
                res.rows.push_back(row);
              }
            }
          }
          for (Algo a : cfg.algos) {
            const Acc& x = acc[a];
            SummaryRow s;
            s.algo = a;
            s.rank = rank;
            s.c = c;
            s.rho = rho;
            s.snr_db = snr;
            s.trials = cfg.trials;
            s.items = x.sae.size();
            s.medsae_db = medsae_db(x.sae);
            double sum = 0;
            for (double d : x.sae)
              sum += d;
            s.mean_sae_db = sum / static_cast<double>(x.sae.size());
            s.mean_iters = x.iters / cfg.trials;
            s.total_seconds = x.seconds;
            s.converged_frac = x.conv / cfg.trials;
            res.summary.push_back(s);
          }
          ++cell;
        }
  return res;
}

inline std::string rows_csv(const std::vector<BenchmarkRow>& rows) {
  std::string s = csv_header();
  for (const auto& r : rows)
    s += csv_row(r);
  return s;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = summary_header();
  for (const auto& r : rows)
    s += summary_row(r);
  return s;
}

} // namespace btd::harness
