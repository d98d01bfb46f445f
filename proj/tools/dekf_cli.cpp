// Command-line front end: experiment presets, relay identification,
// key-process set construction/verification, and offline metrics.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dekf/config.hpp"
#include "dekf/harness.hpp"

namespace {

// Exit codes: 0 ok, 2 config, 3 identification, 4 keyset, 5 filter,
// 6 simulation, 7 io, 1 anything else.
enum ExitCode {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kIdentification = 3,
  kKeyset = 4,
  kFilter = 5,
  kSimulation = 6,
  kIo = 7,
};

int code_for(const std::exception& e) {
  if (dynamic_cast<const dekf::ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const dekf::IdentificationTimeoutError*>(&e) ||
      dynamic_cast<const dekf::NotSettledError*>(&e) ||
      dynamic_cast<const dekf::InputSizeExceededError*>(&e)) {
    return kIdentification;
  }
  if (dynamic_cast<const dekf::GridTooCoarseError*>(&e) ||
      dynamic_cast<const dekf::TuningFailedError*>(&e)) {
    return kKeyset;
  }
  if (dynamic_cast<const dekf::FilterDivergedError*>(&e) ||
      dynamic_cast<const dekf::SingularUpdateError*>(&e)) {
    return kFilter;
  }
  if (dynamic_cast<const dekf::SimulationDivergedError*>(&e)) {
    return kSimulation;
  }
  if (dynamic_cast<const dekf::IoError*>(&e)) return kIo;
  return kOther;
}

dekf::ExperimentConfig resolve_config(const std::string& spec) {
  for (const auto& p : dekf::preset_names()) {
    if (p == spec) return dekf::preset_config(spec);
  }
  std::ifstream in(spec);
  if (!in) throw dekf::ConfigError("not a preset and not a readable file: " + spec);
  nlohmann::json j;
  in >> j;
  return dekf::config_from_json(j);
}

void print_report(const dekf::MetricsReport& r) {
  for (const auto& [k, v] : r.items) {
    std::printf("%-24s %s\n", k.c_str(), dekf::format_double(v).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadrotor identification / estimation / control toolkit"};
  app.require_subcommand(1);

  std::string run_spec, out_dir, keyset_dir;
  unsigned long long seed = 0;
  bool have_seed = false;

  auto* run = app.add_subcommand("run", "run an experiment preset or config");
  run->add_option("spec", run_spec, "preset name or JSON config path")
      ->required();
  run->add_option("--seed", seed, "override RNG seed");
  run->add_option("--output-dir", out_dir, "override output directory");
  run->add_option("--keyset-dir", keyset_dir, "prebuilt keyset directory");

  auto* identify =
      app.add_subcommand("identify", "relay identification only, no flight");
  identify->add_option("--seed", seed, "override RNG seed");
  identify->add_option("--output-dir", out_dir, "override output directory");
  identify->add_option("--keyset-dir", keyset_dir,
                       "prebuilt keyset directory");

  std::string ks_out = "keysets";
  auto* build = app.add_subcommand("build-keyset",
                                   "discretize + tune the key-process sets");
  build->add_option("--output-dir", ks_out, "directory for the keyset files");

  std::string ks_in = "keysets";
  auto* verify = app.add_subcommand("verify-keyset",
                                    "check the covering criterion (J < 10%)");
  verify->add_option("--keyset-dir", ks_in, "directory with keyset files");

  std::vector<std::string> metric_files;
  double snr_cutoff = 5.0;
  auto* metrics = app.add_subcommand(
      "metrics", "offline metrics from estimate/truth/reference CSV logs");
  metrics
      ->add_option("logs", metric_files,
                   "estimate.csv truth.csv reference.csv [control.csv]")
      ->expected(3, 4);
  metrics->add_option("--snr-cutoff", snr_cutoff, "SNR band split [Hz]");

  run->callback([&] {
    if (run->count("--seed")) have_seed = true;
  });
  identify->callback([&] {
    if (identify->count("--seed")) have_seed = true;
  });

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || identify->parsed()) {
      dekf::ExperimentConfig cfg = run->parsed()
                                       ? resolve_config(run_spec)
                                       : dekf::preset_config("identify-all");
      if (identify->parsed()) cfg.flight = false;
      if (have_seed) cfg.seed = seed;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (!keyset_dir.empty()) cfg.keyset_dir = keyset_dir;
      const dekf::ExperimentResult res = dekf::run_experiment(cfg);
      dekf::write_outputs(res.logs, res.report, cfg.output_dir);
      print_report(res.report);
      std::printf("outputs written to %s\n", cfg.output_dir.c_str());
      return kOk;
    }
    if (build->parsed()) {
      const dekf::Keysets k = dekf::build_default_keysets();
      dekf::save_keysets(k, ks_out);
      std::printf("keysets written to %s (%zu/%zu/%zu entries)\n",
                  ks_out.c_str(), k.attitude.entries.size(),
                  k.altitude.entries.size(), k.lateral.entries.size());
      return kOk;
    }
    if (verify->parsed()) {
      const dekf::Keysets k = dekf::load_keysets(ks_in);
      for (const auto& [name, set] :
           {std::pair<const char*, const dekf::KeyProcessSet*>{
                "attitude", &k.attitude},
            {"altitude", &k.altitude},
            {"lateral", &k.lateral}}) {
        dekf::GridSpec gs = set->grid;
        gs.run_verification = true;
        dekf::build_key_processes(set->kind, set->bounds, gs, set->beta);
        std::printf("%s keyset: covering criterion satisfied\n", name);
      }
      return kOk;
    }
    if (metrics->parsed()) {
      const dekf::CsvTable est = dekf::read_csv(metric_files[0]);
      const dekf::CsvTable truth = dekf::read_csv(metric_files[1]);
      const dekf::CsvTable ref = dekf::read_csv(metric_files[2]);
      dekf::MetricsConfig mc;
      mc.snr_cutoff_hz = snr_cutoff;
      if (est.rows.size() >= 2) {
        const int tc = est.column("t");
        mc.dt = est.rows[1][static_cast<std::size_t>(tc)] -
                est.rows[0][static_cast<std::size_t>(tc)];
      }
      const dekf::CsvTable* ctrl = nullptr;
      dekf::CsvTable ctrl_data;
      if (metric_files.size() > 3) {
        ctrl_data = dekf::read_csv(metric_files[3]);
        ctrl = &ctrl_data;
      }
      print_report(dekf::compute_metrics(est, truth, ref, mc, ctrl));
      return kOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return code_for(e);
  }
  return kOther;
}
