// arbfree: data generation, training, evaluation and experiment runs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "arbfree/config.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/errors.hpp"
#include "arbfree/experiments.hpp"
#include "arbfree/surface.hpp"
#include "arbfree/svg.hpp"
#include "arbfree/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace arbfree;

namespace {

enum Exit { kOk = 0, kConfig = 2, kRuntime = 3, kIo = 4 };

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> mode;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON)");
  cmd->add_option("--out", c.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", c.seed, "overrides train.seed");
  cmd->add_option("--jobs", c.jobs, "overrides matrix.jobs");
  cmd->add_option("--mode", c.mode, "mlp (all penalty magnitudes 0) or dcnn")
      ->check(CLI::IsMember({"mlp", "dcnn"}));
  cmd->add_option("--epochs", c.epochs, "overrides train.epochs");
  cmd->add_option("--learning-rate", c.learning_rate, "overrides train.learning_rate");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.train.seed = *c.seed;
  if (c.jobs) cfg.matrix.jobs = *c.jobs;
  if (c.mode) cfg.penalty = penalty_for_mode(parse_mode(*c.mode), cfg.penalty);
  if (c.epochs) cfg.train.epochs = *c.epochs;
  if (c.learning_rate) cfg.train.adam.learning_rate = *c.learning_rate;
  cfg.validate();
  return cfg;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

json sabr_json(const SabrParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"rho", p.rho}, {"nu", p.nu},
          {"f", p.forward},   {"r", p.rate},    {"q", p.dividend}};
}

Mesh mesh_or_default(const std::string& path, const ExperimentConfig& cfg) {
  return path.empty() ? penalty_mesh(cfg.grid) : load_mesh_csv(path);
}

// ---------------------------------------------------------------------------

int cmd_generate(const Common& c, const std::string& reference) {
  const ExperimentConfig cfg = resolve(c);
  const fs::path dir = prepare_dir(cfg.output_dir);
  QuoteGrid in_sample;
  std::string kind = "synthetic_sabr";
  if (reference.empty()) {
    in_sample = synth_in_sample(cfg.sabr, cfg.grid);
  } else {
    in_sample = market_style_grid(load_quotes_csv(reference).grid, cfg.sabr, cfg.grid.boundary_tau0,
                                  cfg.grid.boundary_k0);
    kind = "synthetic_sabr_on_reference_grid";
  }
  const QuoteGrid out_sample = synth_out_sample(cfg.sabr, cfg.grid);
  const Mesh mesh = penalty_mesh(cfg.grid);
  write_quotes_csv(in_sample, (dir / "in_sample.csv").string());
  write_quotes_csv(out_sample, (dir / "out_sample.csv").string());
  write_mesh_csv(mesh, (dir / "mesh.csv").string());

  json manifest = {{"generator", kind},
                   {"sabr", sabr_json(cfg.sabr)},
                   {"in_sample", {{"file", "in_sample.csv"}, {"points", in_sample.size()},
                                  {"boundary_points", in_sample.boundary_count()}}},
                   {"out_sample", {{"file", "out_sample.csv"}, {"points", out_sample.size()},
                                   {"boundary_points", out_sample.boundary_count()}}},
                   {"mesh", {{"file", "mesh.csv"}, {"points", mesh.size()}}}};
  manifest["config"] = json::parse(dump_config(cfg));
  if (!reference.empty()) manifest["reference_grid"] = fs::path(reference).filename().string();
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  std::printf("wrote %zu in-sample, %zu out-of-sample and %zu mesh points to %s\n", in_sample.size(),
              out_sample.size(), mesh.size(), dir.string().c_str());
  return kOk;
}

int cmd_train(const Common& c, const std::string& data_path, const std::string& mesh_path) {
  const ExperimentConfig cfg = resolve(c);
  const fs::path dir = prepare_dir(cfg.output_dir);
  const QuoteGrid data = data_path.empty() ? synth_in_sample(cfg.sabr, cfg.grid) : load_quotes_csv(data_path).grid;
  const Mesh mesh = mesh_or_default(mesh_path, cfg);
  const TrainConfig tc = cfg.train_config();
  TrainReport rep;
  try {
    rep = train(data, mesh, tc, cfg.sabr.rate);
  } catch (const TrainingError& e) {
    json diag = {{"error", e.what()},  {"epoch", e.epoch},
                 {"e_mse", e.e_mse},   {"e_penalty", e.e_penalty},
                 {"learning_rate", tc.adam.learning_rate}, {"seed", tc.seed}};
    write_text_file((dir / "divergence.json").string(), diag.dump(2) + "\n");
    throw;
  }
  save_checkpoint(rep.params, (dir / "checkpoint.json").string());
  write_text_file((dir / "history.csv").string(), history_to_csv(rep.history));

  json hist = json::array();
  for (const auto& h : rep.history)
    hist.push_back({{"epoch", h.epoch}, {"e_mse", h.e_mse}, {"e_penalty", h.e_penalty}, {"objective", h.objective}});
  const LossReport& f = rep.final_report;
  json report = {{"epochs", rep.epochs},
                 {"seed", tc.seed},
                 {"mode", tc.penalty.active() ? "dcnn" : "mlp"},
                 {"penalty", {{"m_k", tc.penalty.m_k}, {"m_kk", tc.penalty.m_kk}, {"m_tau", tc.penalty.m_tau}}},
                 {"final", {{"e_mse", f.e_mse}, {"e_penalty", f.e_penalty}, {"total", f.total},
                            {"terms", f.terms}, {"violations", f.violations}}},
                 {"history", hist}};
  write_text_file((dir / "report.json").string(), report.dump(2) + "\n");

  Series mse{"E_MSE", {}, {}}, pen{"E_P", {}, {}};
  for (const auto& h : rep.history) {
    mse.x.push_back(static_cast<double>(h.epoch));
    mse.y.push_back(h.e_mse);
    pen.x.push_back(static_cast<double>(h.epoch));
    pen.y.push_back(h.e_penalty);
  }
  write_text_file((dir / "history.svg").string(),
                  svg_line_plot({mse, pen}, {"Loss history", "epoch", "loss", true}));
  std::printf("trained %zu epochs in %.2f s: e_mse=%.4g e_penalty=%.4g\n", rep.epochs, rep.seconds, f.e_mse,
              f.e_penalty);
  return kOk;
}

void write_profiles(const PremiumSurface& model, const ExperimentConfig& cfg, const fs::path& dir,
                    const std::string& tag) {
  const fs::path pdir = prepare_dir((dir / "profiles").string());
  const auto slices = default_profile_slices();
  const auto moneyness = linspace(0.0, cfg.grid.moneyness_max, cfg.grid.out_moneyness);
  const RiskProfile prof = risk_profiles(model, slices, moneyness, cfg.sabr.rate);
  write_text_file((pdir / (tag + ".csv")).string(), profile_to_csv(prof));
  const char* names[] = {"d_m", "d_mm", "d_tau"};
  for (int k = 0; k < 3; ++k) {
    std::vector<Series> series;
    for (const auto& s : prof.slices) {
      Series line{"tau=" + format_real(s.tau), s.moneyness, k == 0 ? s.d_m : k == 1 ? s.d_mm : s.d_tau};
      series.push_back(std::move(line));
    }
    write_text_file((pdir / (tag + "_" + names[k] + ".svg")).string(),
                    svg_line_plot(series, {std::string(names[k]) + " by expiry slice", "moneyness", names[k]}));
  }
  std::printf("risk profile %s: %zu violations\n", tag.c_str(), prof.violations());
}

int cmd_evaluate(const Common& c, const std::string& checkpoint, bool oracle, const std::string& in_path,
                 const std::string& out_path, const std::string& mesh_path, bool profiles) {
  const ExperimentConfig cfg = resolve(c);
  if (oracle == !checkpoint.empty()) throw ConfigError("evaluate needs exactly one of --checkpoint or --oracle");
  const fs::path dir = prepare_dir(cfg.output_dir);
  std::optional<MlpParams> params;
  std::unique_ptr<PremiumSurface> model;
  if (oracle) {
    model = std::make_unique<SabrSurface>(cfg.sabr);
  } else {
    params = load_checkpoint(checkpoint);
    model = std::make_unique<MlpSurface>(*params);
  }
  const std::string tag = oracle ? "oracle" : "model";
  PenaltyConfig score = PenaltyConfig::baseline();
  score.lower_bound = cfg.penalty.lower_bound;

  std::vector<MetricsRow> rows;
  if (!in_path.empty()) {
    MetricsRow r = eval_metrics(*model, load_quotes_csv(in_path).grid, mesh_or_default(mesh_path, cfg), score,
                                cfg.sabr.rate);
    r.sample = "in";
    rows.push_back(r);
  }
  if (!out_path.empty()) {
    const QuoteGrid truth = load_quotes_csv(out_path).grid;
    MetricsRow r = eval_metrics(*model, truth, mesh_from_grid(truth), score, cfg.sabr.rate);
    r.sample = "out";
    rows.push_back(r);
  }
  if (rows.empty() && !profiles) throw ConfigError("evaluate needs --in-sample, --out-sample or --profiles");

  std::string csv = "model,sample,e_mse,e_penalty,e_mse_sigma,sigma_points,invalid_iv\n";
  json arr = json::array();
  for (auto& r : rows) {
    r.model = tag;
    r.seed = params ? params->seed : 0;
    csv += tag + ',' + r.sample + ',' + format_real(r.e_mse) + ',' + format_real(r.e_penalty) + ',' +
           format_real(r.e_mse_sigma) + ',' + std::to_string(r.sigma_points) + ',' + std::to_string(r.invalid_iv) +
           '\n';
    arr.push_back({{"model", tag}, {"sample", r.sample}, {"e_mse", r.e_mse}, {"e_penalty", r.e_penalty},
                   {"e_mse_sigma", r.e_mse_sigma}, {"sigma_points", r.sigma_points}, {"invalid_iv", r.invalid_iv}});
    std::printf("%s %s: e_mse=%.4g e_penalty=%.4g e_mse_sigma=%.4g invalid_iv=%zu/%zu\n", tag.c_str(),
                r.sample.c_str(), r.e_mse, r.e_penalty, r.e_mse_sigma, r.invalid_iv, r.sigma_points);
  }
  if (!rows.empty()) {
    write_text_file((dir / "metrics.csv").string(), csv);
    write_text_file((dir / "metrics.json").string(), arr.dump(2) + "\n");
  }
  if (profiles) write_profiles(*model, cfg, dir, tag);
  return kOk;
}

int cmd_profiles(const Common& c, const std::string& checkpoint, bool oracle) {
  const ExperimentConfig cfg = resolve(c);
  if (oracle == !checkpoint.empty()) throw ConfigError("profiles needs exactly one of --checkpoint or --oracle");
  const fs::path dir = prepare_dir(cfg.output_dir);
  if (oracle) {
    write_profiles(SabrSurface(cfg.sabr), cfg, dir, "oracle");
  } else {
    const MlpParams params = load_checkpoint(checkpoint);
    write_profiles(MlpSurface(params), cfg, dir, fs::path(checkpoint).stem().string());
  }
  return kOk;
}

int cmd_matrix(const Common& c, std::optional<std::size_t> seed_count) {
  ExperimentConfig cfg = resolve(c);
  if (seed_count) {
    if (*seed_count == 0) throw ConfigError("--seeds must be at least 1");
    cfg.seeds.clear();
    for (std::size_t s = 0; s < *seed_count; ++s) cfg.seeds.push_back(s);
  }
  const fs::path dir = prepare_dir(cfg.output_dir);
  const MatrixResult result = run_matrix(cfg.matrix_config());
  const auto summary = summarize(result);
  write_text_file((dir / "matrix.csv").string(), matrix_to_csv(result));
  write_text_file((dir / "matrix_summary.csv").string(), summary_to_csv(summary));

  std::vector<BoxGroup> in_pen, out_sigma;
  for (const auto& cond : cfg.matrix.conditions) {
    for (ModelMode mode : {ModelMode::Mlp, ModelMode::Dcnn}) {
      BoxGroup a{cond.tag() + " " + mode_name(mode), {}}, b = a;
      for (const auto& r : result.rows) {
        if (!r.ok || !(r.condition == cond) || r.mode != mode) continue;
        a.values.push_back(r.in.e_penalty);
        b.values.push_back(r.out.e_mse_sigma);
      }
      in_pen.push_back(std::move(a));
      out_sigma.push_back(std::move(b));
    }
  }
  PlotOptions wide{"In-sample penalty", "", "E_P", true, 1400, 420};
  write_text_file((dir / "matrix_in_penalty.svg").string(), svg_box_plot(in_pen, wide));
  wide.title = "Out-of-sample IV error";
  wide.y_label = "E_MSE sigma";
  write_text_file((dir / "matrix_out_sigma.svg").string(), svg_box_plot(out_sigma, wide));

  std::printf("matrix: %zu runs, %zu failed\n", result.rows.size(), result.failures());
  for (const auto& r : result.rows)
    if (!r.ok) std::fprintf(stderr, "failed %s %s seed %llu: %s\n", r.condition.tag().c_str(),
                            mode_name(r.mode).c_str(), static_cast<unsigned long long>(r.seed), r.error.c_str());
  return result.failures() == 0 ? kOk : kRuntime;
}

int cmd_bench(const Common& c, std::optional<std::size_t> repeats) {
  ExperimentConfig cfg = resolve(c);
  if (repeats) cfg.bench.repeats = *repeats;
  if (c.epochs) cfg.bench.epochs = *c.epochs;
  cfg.validate();
  const fs::path dir = prepare_dir(cfg.output_dir);
  const BenchResult result = bench(cfg.bench_config());
  write_text_file((dir / "bench.csv").string(), bench_to_csv(result));
  write_text_file((dir / "bench_summary.csv").string(), bench_summary_to_csv(result));
  for (const auto& s : result.summary)
    std::printf("%s %zux%zu (%zu params): mlp %.3f s, dcnn %.3f s, ratio %.2f\n", s.activation.c_str(),
                s.hidden_layers, s.width, s.params, s.mlp.mean, s.dcnn.mean, s.ratio);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arbitrage-consistent option premium surfaces with derivative-constrained networks"};
  app.require_subcommand(1);
  app.footer(config_reference() +
             "\nExit codes: 0 ok, 2 config error, 3 runtime or training error, 4 I/O error.");
  app.set_version_flag("--version", "arbfree 0.1.0");

  Common common;
  std::string reference, data_path, mesh_path, checkpoint, in_path, out_path;
  bool oracle = false, profiles = false, dump = false;
  std::optional<std::size_t> seed_count, repeats;

  auto* gen = app.add_subcommand("generate", "write in-sample, out-of-sample and mesh CSVs plus a manifest");
  add_common(gen, common);
  gen->add_option("--reference", reference, "quote CSV whose (moneyness, tau) locations replace the in-sample grid")
      ;
  gen->add_flag("--dump-config", dump, "print the resolved config and exit");

  auto* tr = app.add_subcommand("train", "train a network; writes checkpoint.json, history.csv, report.json");
  add_common(tr, common);
  tr->add_option("--data", data_path, "training quotes CSV (default: synthesize from the config)")
      ;
  tr->add_option("--mesh", mesh_path, "penalty mesh CSV (default: from the config grid)");

  auto* ev = app.add_subcommand("evaluate", "score a checkpoint (or the SABR oracle) against truth CSVs");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint, "checkpoint.json from train");
  ev->add_flag("--oracle", oracle, "evaluate the exact SABR pricer instead of a network");
  ev->add_option("--in-sample", in_path, "in-sample quotes CSV");
  ev->add_option("--out-sample", out_path, "out-of-sample truth CSV with sigma column");
  ev->add_option("--mesh", mesh_path, "penalty mesh CSV for the in-sample row");
  ev->add_flag("--profiles", profiles, "also write risk-profile CSV/SVG files");

  auto* pr = app.add_subcommand("profiles", "risk-profile slices of a checkpoint or the oracle");
  add_common(pr, common);
  pr->add_option("--checkpoint", checkpoint, "checkpoint.json from train");
  pr->add_flag("--oracle", oracle, "profile the exact SABR pricer");

  auto* mx = app.add_subcommand("matrix", "train and score every condition x seed x mode");
  add_common(mx, common);
  mx->add_option("--seeds", seed_count, "use seeds 0..N-1 (overrides seeds)");

  auto* bn = app.add_subcommand("bench", "time MLP and DCNN training over the bench sweep");
  add_common(bn, common);
  bn->add_option("--repeats", repeats, "overrides bench.repeats");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) {
      if (dump) {
        std::cout << dump_config(resolve(common));
        return kOk;
      }
      return cmd_generate(common, reference);
    }
    if (*tr) return cmd_train(common, data_path, mesh_path);
    if (*ev) return cmd_evaluate(common, checkpoint, oracle, in_path, out_path, mesh_path, profiles);
    if (*pr) return cmd_profiles(common, checkpoint, oracle);
    if (*mx) return cmd_matrix(common, seed_count);
    if (*bn) return cmd_bench(common, repeats);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
