// btd: generate synthetic tensors, extract rank-(2,2,2) blocks, split them
// into rank-1 terms and run seeded benchmark sweeps.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure.

#include "btd/btd.hpp"
#include "btd/harness/benchmark.hpp"
#include "btd/harness/compress.hpp"
#include "btd/harness/io.hpp"
#include "btd/harness/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace btd;
using namespace btd::harness;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct GenerateArgs {
  Index rank = 10;
  double c = 0.0;
  std::string rho = "none";
  std::string rho_modes = "1";
  std::string snr_db = "inf";
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
};

struct DeflateArgs {
  std::string in;
  std::string algo = "asu";
  double tol = 1e-6;
  int max_iters = 1000;
  int stiefel_steps = AsuConfig{}.stiefel_steps;
  int mode_passes = AsuConfig{}.mode_passes;
  std::string init = "gevd";
  std::string pair = "auto";
  std::string truth;
  std::uint64_t seed = 0;
  bool compress = false;
  Index rank = 0;
  std::string report_out;
  std::string model_out;
};

struct SplitArgs {
  std::string model;
  std::string out;
  std::uint64_t seed = 0;
};

struct BenchmarkArgs {
  std::string config;
  std::string out;
  std::string summary;
  bool omit_timing = false;
};

std::vector<int> parse_modes(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : harness::detail::split_list(s)) {
    const long long m = harness::detail::parse_int(p, "rho-modes");
    if (m < 1 || m > 3)
      throw std::invalid_argument("--rho-modes entries must be 1, 2 or 3");
    out.push_back(static_cast<int>(m - 1));
  }
  return out;
}

void write_json(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string default_path(const std::string& given, const std::string& base, const std::string& suffix) {
  return given.empty() ? base + suffix : given;
}

int cmd_generate(const GenerateArgs& a) {
  GeneratorConfig g;
  g.rank = a.rank;
  g.c = a.c;
  if (a.rho != "none")
    g.rho = harness::detail::parse_double(a.rho, "rho");
  g.modes_with_rho = parse_modes(a.rho_modes);
  g.snr_db = harness::detail::parse_double(a.snr_db, "snr-db");
  g.seed = a.seed;
  const SyntheticProblem p = generate(g);
  write_tensor(a.out, p.tensor);
  json truth = kruskal_to_json(p.truth);
  truth["generator"] = {{"rank", g.rank},
                        {"collinearity", g.c},
                        {"rho", a.rho},
                        {"rho_modes", a.rho_modes},
                        {"snr_db", a.snr_db},
                        {"seed", g.seed}};
  write_json(default_path(a.truth_out, a.out, ".truth.json"), truth);
  return 0;
}

int cmd_deflate(const DeflateArgs& a) {
  const Algo algo = parse_algo(a.algo);
  const InitStrategy strategy = parse_init(a.init);
  const auto pair = parse_pair(a.pair);
  DenseTensor3 y = read_tensor(a.in);

  std::optional<Compressed> comp;
  if (!y.is_cubic() || a.compress) {
    if (!a.compress)
      throw std::invalid_argument("input is " + btd::detail::dims_string(y.dims()) +
                                  "; pass --compress to reduce it to R x R x R");
    const Index r = a.rank > 0 ? a.rank : estimate_cube_rank(y);
    comp = compress_to_cube(y, r);
    y = comp->core;
  }

  std::optional<KruskalModel> truth;
  if (!a.truth.empty()) {
    truth = kruskal_from_json(read_json(a.truth));
    if (comp)
      truth->factors = {comp->basis[0].transpose() * truth->factors[0],
                        comp->basis[1].transpose() * truth->factors[1],
                        comp->basis[2].transpose() * truth->factors[2]};
  }
  if (strategy == InitStrategy::truth && !truth)
    throw std::invalid_argument("--init truth needs --truth");

  AsuConfig cfg;
  cfg.tol = a.tol;
  cfg.max_iters = a.max_iters;
  cfg.stiefel_steps = a.stiefel_steps;
  cfg.mode_passes = a.mode_passes;
  cfg.seed = a.seed;
  cfg.validate();

  const Initialization init =
      initialize(y, strategy, pair, a.seed, block_size_of(algo), truth ? &*truth : nullptr);
  if (init.candidates.used_fallback)
    std::cerr << "warning: GEVD initialization failed (" << init.candidates.note
              << "); using random init\n";
  SolveOutcome out = solve(y, init.model, algo, cfg);

  RunReport rep;
  rep.algo = algo_name(algo);
  rep.config = {{"input", a.in},
                {"tol", cfg.tol},
                {"max_iters", cfg.max_iters},
                {"stiefel_steps", cfg.stiefel_steps},
                {"mode_passes", cfg.mode_passes},
                {"init", init_name(strategy)},
                {"pair", a.pair},
                {"seed", cfg.seed},
                {"compress", comp.has_value()}};
  for (size_t i = 0; i < out.trace.size(); ++i)
    rep.trace.push_back({static_cast<int>(i + 1), out.trace[i].cost, out.trace[i].rel_error,
                         out.trace[i].seconds});
  std::array<Vector, 3> sigma = out.sigma;
  if (algo == Algo::als) {
    try {
      sigma = orthogonal_normalize(out.model).sigma;
    } catch (const NumericalError&) {
    }
  }
  for (int n = 0; n < 3; ++n)
    rep.sigma[n].assign(sigma[n].data(), sigma[n].data() + sigma[n].size());
  rep.final_rel_error = out.final_rel_error;
  rep.iterations = out.iterations;
  rep.converged = out.converged;
  rep.seconds = out.seconds;
  rep.metrics["selected_components"] = init.selected;
  rep.metrics["init_fallback"] = init.candidates.used_fallback;
  rep.metrics["split_ok"] = out.split_ok;
  if (!out.split_ok)
    rep.metrics["split_error"] = out.split_error;
  if (truth) {
    std::vector<std::array<Vector, 3>> est;
    for (const auto& t : out.terms)
      est.push_back(t.vectors);
    std::vector<Index> matched;
    const auto sae = matched_sae_db(est, *truth, &matched, static_cast<size_t>(block_size_of(algo)));
    rep.metrics["sae_db"] = sae;
    rep.metrics["matched_truth"] = matched;
  }

  BlockPairModel model = out.model;
  if (comp) {
    model.blockG.factors = decompress_factors(*comp, model.blockG.factors);
    model.blockH.factors = decompress_factors(*comp, model.blockH.factors);
  }
  write_json(default_path(a.report_out, a.in, ".report.json"), report_to_json(rep));
  write_json(default_path(a.model_out, a.in, ".model.json"), pair_to_json(model));
  std::cout << rep.algo << ": iterations " << rep.iterations << ", rel error "
            << fmt_num(rep.final_rel_error) << (rep.converged ? ", converged" : ", not converged")
            << "\n";
  return 0;
}

int cmd_split(const SplitArgs& a) {
  const BlockPairModel p = pair_from_json(read_json(a.model));
  const SplitResult s = split_block(p, a.seed);
  json j = terms_to_json(s.terms);
  j["remainder"] = tucker_to_json(s.remainder);
  write_json(default_path(a.out, a.model, ".terms.json"), j);
  for (const auto& t : s.terms)
    std::cout << "term weight " << fmt_num(t.weight) << "\n";
  return 0;
}

int cmd_benchmark(const BenchmarkArgs& a) {
  const BenchmarkConfig cfg = parse_benchmark_config(read_file(a.config));
  std::ofstream rows(a.out, std::ios::binary);
  if (!rows)
    throw IoError("cannot open " + a.out + " for writing");
  rows << csv_header();
  BenchmarkOptions opt;
  opt.omit_timing = a.omit_timing;
  const BenchmarkResult res = run_benchmark(cfg, opt, [&](const BenchmarkRow& r) { rows << csv_row(r); });
  rows.close();
  if (!rows)
    throw IoError("write to " + a.out + " failed");
  if (!a.summary.empty())
    write_file(a.summary, summary_csv(res.summary));
  for (const auto& s : res.summary)
    std::cout << algo_name(s.algo) << " R=" << s.rank << " c=" << fmt_num(s.c)
              << " MedSAE=" << fmt_num(s.medsae_db) << " dB\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block tensor deflation: rank-(2,2,2) block extraction and rank-1 splitting"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a synthetic tensor and its ground truth");
  gen->add_option("--rank", ga.rank, "Rank R (tensor is R x R x R)")->check(CLI::Range(2, 100000));
  gen->add_option("--collinearity", ga.c, "Pairwise collinearity c in [0, 1)");
  gen->add_option("--rho", ga.rho, "Collinearity of components 1 and 2, or 'none'");
  gen->add_option("--rho-modes", ga.rho_modes, "Comma list of 1-based modes that receive rho");
  gen->add_option("--snr-db", ga.snr_db, "SNR in dB, or 'inf' for a noiseless tensor");
  gen->add_option("--seed", ga.seed, "RNG seed");
  gen->add_option("--out", ga.out, "Output tensor file (BTF1)")->required();
  gen->add_option("--truth", ga.truth_out, "Ground-truth JSON (default <out>.truth.json)");

  DeflateArgs da;
  auto* def = app.add_subcommand("deflate", "Extract a two-block decomposition from a tensor file");
  def->add_option("--in", da.in, "Input tensor file (BTF1)")->required();
  def->add_option("--algo", da.algo, "asu | als | asu1");
  def->add_option("--tol", da.tol, "Relative change of the error that stops the iteration");
  def->add_option("--max-iters", da.max_iters, "Iteration cap");
  def->add_option("--stiefel-steps", da.stiefel_steps, "Feasible steps per mode visit (ASU)");
  def->add_option("--mode-passes", da.mode_passes, "sigma/X alternations per mode visit (ASU)");
  def->add_option("--init", da.init, "gevd | random | truth");
  def->add_option("--pair", da.pair, "auto or i,j (1-based) components seeding the block");
  def->add_option("--truth", da.truth, "Ground-truth JSON, for --init truth and SAE metrics");
  def->add_option("--seed", da.seed, "Seed for random init and the splitter");
  def->add_flag("--compress", da.compress, "Compress to R x R x R by truncated HOSVD first");
  def->add_option("--rank", da.rank, "Target R for --compress (default: estimated)");
  def->add_option("--report", da.report_out, "Report JSON (default <in>.report.json)");
  def->add_option("--model", da.model_out, "Model JSON (default <in>.model.json)");

  SplitArgs sa;
  auto* spl = app.add_subcommand("split", "Split the 2 x 2 x 2 block of a saved model into rank-1 terms");
  spl->add_option("--model", sa.model, "Model JSON written by deflate")->required();
  spl->add_option("--out", sa.out, "Terms JSON (default <model>.terms.json)");
  spl->add_option("--seed", sa.seed, "Seed for the singular-slice rotation");

  BenchmarkArgs ba;
  auto* ben = app.add_subcommand("benchmark", "Run a seeded sweep and write CSV");
  ben->add_option("--config", ba.config, "Sweep config file")->required();
  ben->add_option("--out", ba.out, "Row CSV")->required();
  ben->add_option("--summary", ba.summary, "Summary CSV");
  ben->add_flag("--omit-timing", ba.omit_timing, "Write 0 in time columns (byte-stable output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen)
      return cmd_generate(ga);
    if (*def)
      return cmd_deflate(da);
    if (*spl)
      return cmd_split(sa);
    return cmd_benchmark(ba);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
