// Command-line front end: dataset generation, training, registration,
// evaluation, runtime benchmarks and the input-mode ablation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/datagen.hpp"
#include "lgmreg/error.hpp"
#include "lgmreg/evalbench.hpp"
#include "lgmreg/io.hpp"

namespace fs = std::filesystem;
using namespace lgmreg;

namespace {

constexpr int kDatasetFormatVersion = 1;

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct NetFlags {
  std::string input_mode = "invariant_features";
  std::size_t neighbors = kDefaultNeighbors;
  std::string centroid_weighting = "objective";
  std::string loss = "mse";
  double svd_gap = 1e-6;
  bool no_skip_degenerate = false;

  PipelineOptions options(std::size_t threads) const {
    PipelineOptions o;
    o.input_mode = parse_input_mode(input_mode);
    o.neighbors = neighbors;
    if (centroid_weighting == "objective")
      o.centroid_weighting = CentroidWeighting::kObjective;
    else if (centroid_weighting == "mixture")
      o.centroid_weighting = CentroidWeighting::kMixture;
    else
      throw InvalidArgument("unknown centroid weighting '" + centroid_weighting + "'");
    o.loss = parse_loss_kind(loss);
    o.svd_gap = svd_gap;
    o.skip_degenerate = !no_skip_degenerate;
    o.threads = threads;
    return o;
  }
};

void add_net_flags(CLI::App* cmd, NetFlags& f) {
  cmd->add_option("--input-mode", f.input_mode, "invariant_features (rri) or raw_xyz (xyz)")->capture_default_str();
  cmd->add_option("--neighbors", f.neighbors, "neighbors per point for invariant features")->capture_default_str();
  cmd->add_option("--centroid-weighting", f.centroid_weighting, "objective or mixture")->capture_default_str();
  cmd->add_option("--loss", f.loss, "mse (transform matrices) or rmse")->capture_default_str();
  cmd->add_option("--svd-gap", f.svd_gap, "relative singular-value gap that zeroes a sample gradient")
      ->capture_default_str();
  cmd->add_flag("--no-skip-degenerate", f.no_skip_degenerate, "fail on degenerate samples instead of skipping");
}

void add_train_flags(CLI::App* cmd, TrainConfig& c) {
  cmd->add_option("--epochs", c.epochs)->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size)->capture_default_str();
  cmd->add_option("--lr", c.lr)->capture_default_str();
  cmd->add_option("--lr-patience", c.lr_patience, "epochs without validation gain before decay")
      ->capture_default_str();
  cmd->add_option("--lr-decay", c.lr_decay)->capture_default_str();
  cmd->add_option("--components", c.components, "mixture components J")->capture_default_str();
  cmd->add_option("--val-fraction", c.val_fraction)->capture_default_str();
}

// Global options plus those of the subcommand that ran.
void log_config(const CLI::App& app) {
  std::string active;
  for (const auto* sub : app.get_subcommands()) active = sub->get_name() + ".";
  std::istringstream lines(app.config_to_str(true, false));
  std::string line;
  std::cerr << "resolved config:\n";
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (line.empty() || eq == std::string::npos) continue;
    const auto dot = line.find('.');
    if (dot < eq && line.compare(0, active.size(), active) != 0) continue;
    std::cerr << "  " << line << '\n';
  }
}

Checkpoint load_or_fail(const std::string& path) {
  if (path.empty()) throw InvalidArgument("--checkpoint is required");
  return load_checkpoint(path);
}

fs::path split_dir(const std::string& data, const std::string& split) {
  const fs::path root(data);
  if (fs::exists(root / "manifest.json")) return root;
  return root / split;
}

void write_history(const fs::path& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "epoch,train_loss,val_loss,lr,skipped\n";
  for (const auto& h : history)
    out << h.epoch << ',' << io::format_double(h.train_loss) << ',' << io::format_double(h.val_loss) << ','
        << io::format_double(h.lr) << ',' << h.skipped << '\n';
}

std::string family_list(const std::vector<ShapeFamily>& families) {
  std::string s;
  for (ShapeFamily f : families) s += (s.empty() ? "" : ",") + to_string(f);
  return s;
}

void print_eval(const EvalResult& r) {
  std::printf("%s: pairs=%zu recall@%.3g=%.4f mean_rmse=%.6g failures=%zu (conventional: recall=%.4f mean=%.6g)\n",
              to_string(r.method).c_str(), r.pairs.size(), r.tau, r.recall, r.mean_rmse, r.failures,
              r.recall_conventional, r.mean_rmse_conventional);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lgmreg: point cloud registration through latent Gaussian mixtures"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version",
                       std::string("lgmreg ") + LGMREG_VERSION + " (checkpoint format " +
                           std::to_string(kCheckpointVersion) + ", dataset format " +
                           std::to_string(kDatasetFormatVersion) + ")");

  Common common;
  app.add_option("--seed", common.seed, "root seed for every random stream")->capture_default_str();
  app.add_option("--threads", common.threads, "worker threads (1 keeps runs bit-reproducible)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // gen
  std::string gen_protocol = "clean", gen_out = "data";
  DatasetSizes gen_sizes{10, 5, 1024};
  auto* gen = app.add_subcommand("gen", "generate a procedural pair dataset");
  gen->add_option("--protocol", gen_protocol, "clean, noisy, unseen or partial")->capture_default_str();
  gen->add_option("--train", gen_sizes.train, "training pairs")->capture_default_str();
  gen->add_option("--test", gen_sizes.test, "test pairs")->capture_default_str();
  gen->add_option("--points", gen_sizes.points, "points per cloud")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->capture_default_str();

  // train
  TrainConfig tcfg;
  NetFlags train_net;
  std::string train_data, train_out = "model.ckpt", train_history;
  auto* trn = app.add_subcommand("train", "train the correspondence network");
  trn->add_option("--data", train_data, "dataset root or train split directory")->required();
  trn->add_option("--out", train_out, "checkpoint path")->capture_default_str();
  trn->add_option("--history", train_history, "per-epoch CSV (default: <out>.history.csv)");
  add_train_flags(trn, tcfg);
  add_net_flags(trn, train_net);

  // register
  std::string reg_source, reg_target, reg_ckpt, reg_method = "latent", reg_out, reg_refine = "none";
  NetFlags reg_net;
  MethodOptions reg_opts;
  auto* reg = app.add_subcommand("register", "register one source/target pair");
  reg->add_option("--source", reg_source)->required();
  reg->add_option("--target", reg_target)->required();
  reg->add_option("--checkpoint", reg_ckpt, "network checkpoint (latent method)");
  reg->add_option("--method", reg_method, "latent, em or icp")->capture_default_str();
  reg->add_option("--refine", reg_refine, "none or icp")->capture_default_str();
  reg->add_option("--out", reg_out, "write the 4x4 transform here (default: stdout)");
  reg->add_option("--em-components", reg_opts.em_components)->capture_default_str();
  reg->add_option("--em-iters", reg_opts.em_iters)->capture_default_str();
  reg->add_option("--icp-iters", reg_opts.icp_iters)->capture_default_str();
  reg->add_option("--centroid-weighting", reg_net.centroid_weighting)->capture_default_str();

  // eval
  std::string eval_data, eval_split = "test", eval_ckpt, eval_out = ".";
  std::vector<std::string> eval_methods{"latent"};
  bool eval_refine = false;
  EvalOptions eval_opts;
  MethodOptions eval_method_opts;
  NetFlags eval_net;
  auto* ev = app.add_subcommand("eval", "evaluate methods on a dataset split");
  ev->add_option("--data", eval_data, "dataset root or split directory")->required();
  ev->add_option("--split", eval_split)->capture_default_str();
  ev->add_option("--checkpoint", eval_ckpt, "network checkpoint (latent method)");
  ev->add_option("--method", eval_methods, "one or more of latent, em, icp")->capture_default_str();
  ev->add_flag("--refine", eval_refine, "chain ICP after latent/em estimates");
  ev->add_flag("--oracle", eval_opts.oracle, "score the ground-truth transform (harness check)");
  ev->add_option("--rmse-samples", eval_opts.rmse_samples)->capture_default_str();
  ev->add_option("--tau", eval_opts.tau, "recall threshold")->capture_default_str();
  ev->add_option("--em-components", eval_method_opts.em_components)->capture_default_str();
  ev->add_option("--icp-iters", eval_method_opts.icp_iters)->capture_default_str();
  ev->add_option("--centroid-weighting", eval_net.centroid_weighting)->capture_default_str();
  ev->add_option("--out", eval_out, "directory for per_pair.csv and cdf.csv")->capture_default_str();

  // bench
  std::vector<std::string> bench_methods{"latent"};
  std::vector<std::size_t> bench_sizes{1000, 2000, 3000, 4000, 5000};
  std::size_t bench_repeats = 5, bench_components = 16;
  std::string bench_ckpt, bench_out = "bench.csv";
  MethodOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "runtime versus cloud size");
  bench->add_option("--method", bench_methods)->capture_default_str();
  bench->add_option("--sizes", bench_sizes, "cloud sizes N")->capture_default_str();
  bench->add_option("--repeats", bench_repeats)->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--checkpoint", bench_ckpt, "network checkpoint (default: untrained weights)");
  bench->add_option("--components", bench_components, "J for untrained weights")->capture_default_str();
  bench->add_option("--out", bench_out)->capture_default_str();

  // ablate
  std::string abl_data, abl_out = "ablation.csv";
  std::vector<std::string> abl_modes{"invariant_features", "raw_xyz"};
  TrainConfig abl_cfg;
  NetFlags abl_net;
  auto* abl = app.add_subcommand("ablate", "train and evaluate once per input mode");
  abl->add_option("--data", abl_data, "dataset root with train/ and test/")->required();
  abl->add_option("--modes", abl_modes)->capture_default_str();
  abl->add_option("--out", abl_out)->capture_default_str();
  add_train_flags(abl, abl_cfg);
  add_net_flags(abl, abl_net);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    log_config(app);

    if (gen->parsed()) {
      const PairDataset ds = build_dataset(parse_protocol(gen_protocol), gen_sizes, common.seed);
      write_dataset(ds, gen_out);
      std::printf("wrote %zu train and %zu test pairs to %s\n", ds.train.size(), ds.test.size(), gen_out.c_str());
      std::printf("train families: %s\n", family_list(ds.train_families).c_str());
      std::printf("test families: %s\n", family_list(ds.test_families).c_str());
    } else if (trn->parsed()) {
      tcfg.seed = common.seed;
      tcfg.pipeline = train_net.options(common.threads);
      const auto pairs = read_split(split_dir(train_data, "train"));
      const TrainResult r = train(pairs, tcfg, [](const EpochStats& s) {
        std::fprintf(stderr, "epoch %zu train_loss=%.6g val_loss=%.6g lr=%.3g skipped=%zu\n", s.epoch,
                     s.train_loss, s.val_loss, s.lr, s.skipped);
      });
      save_checkpoint(train_out, {r.params, tcfg.pipeline.input_mode, tcfg.pipeline.neighbors});
      const std::string hist = train_history.empty() ? train_out + ".history.csv" : train_history;
      write_history(hist, r.history);
      std::printf("trained on %zu pairs (%zu validation); best epoch %zu; checkpoint %s\n", r.train_size,
                  r.val_size, r.best_epoch, train_out.c_str());
    } else if (reg->parsed()) {
      const PointCloud source = io::read_point_cloud(fs::path(reg_source));
      const PointCloud target = io::read_point_cloud(fs::path(reg_target));
      const Method method = parse_method(reg_method);
      if (reg_refine != "none" && reg_refine != "icp") throw InvalidArgument("--refine must be none or icp");
      Checkpoint ck;
      reg_opts.seed = common.seed;
      reg_opts.refine = reg_refine == "icp";
      if (method == Method::kLatent) {
        ck = load_or_fail(reg_ckpt);
        reg_opts.params = &ck.params;
        reg_opts.pipeline = reg_net.options(common.threads);
        reg_opts.pipeline.input_mode = ck.input_mode;
        reg_opts.pipeline.neighbors = ck.neighbors;
      }
      const RigidTransform T = run_method(method, source, target, reg_opts);
      if (reg_out.empty())
        io::write_transform(std::cout, T);
      else
        io::write_transform(fs::path(reg_out), T);
    } else if (ev->parsed()) {
      const auto pairs = read_split(split_dir(eval_data, eval_split));
      if (pairs.empty()) throw InvalidArgument("split '" + eval_split + "' has no pairs");
      eval_opts.threads = common.threads;
      eval_method_opts.seed = common.seed;
      eval_method_opts.refine = eval_refine;
      Checkpoint ck;
      std::vector<EvalResult> results;
      for (const auto& name : eval_methods) {
        const Method method = parse_method(name);
        MethodOptions opts = eval_method_opts;
        if (method == Method::kLatent && !eval_opts.oracle) {
          if (ck.params.size() == 0) ck = load_or_fail(eval_ckpt);
          opts.params = &ck.params;
          opts.pipeline = eval_net.options(1);
          opts.pipeline.input_mode = ck.input_mode;
          opts.pipeline.neighbors = ck.neighbors;
        }
        results.push_back(evaluate(pairs, method, opts, eval_opts));
        print_eval(results.back());
      }
      fs::create_directories(eval_out);
      write_per_pair_csv(fs::path(eval_out) / "per_pair.csv", results);
      write_cdf_csv(fs::path(eval_out) / "cdf.csv", results.front().cdf);
    } else if (bench->parsed()) {
      Checkpoint ck;
      if (!bench_ckpt.empty()) {
        ck = load_checkpoint(bench_ckpt);
      } else {
        Rng rng = make_rng(common.seed, "init");
        ck.params = CorrNetParams::initialize(feature_dimension(ck.input_mode, ck.neighbors), bench_components, rng);
      }
      bench_opts.params = &ck.params;
      bench_opts.pipeline.input_mode = ck.input_mode;
      bench_opts.pipeline.neighbors = ck.neighbors;
      bench_opts.seed = common.seed;
      std::vector<BenchRow> rows;
      for (const auto& name : bench_methods) {
        const auto r = bench_runtime(parse_method(name), bench_sizes, bench_repeats, bench_opts);
        for (const auto& row : r) std::printf("%s N=%zu %.3f ms\n", name.c_str(), row.points, row.mean_ms);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      write_bench_csv(bench_out, rows);
    } else if (abl->parsed()) {
      const auto train_pairs = read_split(fs::path(abl_data) / "train");
      const auto test_pairs = read_split(fs::path(abl_data) / "test");
      if (test_pairs.empty()) throw InvalidArgument("test split has no pairs");
      std::ofstream out(abl_out);
      if (!out) throw IoError("cannot open '" + abl_out + "' for writing");
      out << "input_mode,recall,mean_rmse,recall_conventional,mean_rmse_conventional\n";
      for (const auto& mode : abl_modes) {
        TrainConfig cfg = abl_cfg;
        cfg.seed = common.seed;
        NetFlags net = abl_net;
        net.input_mode = mode;
        cfg.pipeline = net.options(common.threads);
        const TrainResult r = train(train_pairs, cfg);
        MethodOptions opts;
        opts.params = &r.params;
        opts.pipeline = cfg.pipeline;
        opts.seed = common.seed;
        EvalOptions eopt;
        eopt.threads = common.threads;
        const EvalResult e = evaluate(test_pairs, Method::kLatent, opts, eopt);
        std::printf("%s: ", to_string(cfg.pipeline.input_mode).c_str());
        print_eval(e);
        out << to_string(cfg.pipeline.input_mode) << ',' << io::format_double(e.recall) << ','
            << io::format_double(e.mean_rmse) << ',' << io::format_double(e.recall_conventional) << ','
            << io::format_double(e.mean_rmse_conventional) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
