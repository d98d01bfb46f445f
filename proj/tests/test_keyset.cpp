#include <cstdio>
#include <filesystem>

#include "dekf/keyset.hpp"
#include "dekf/mrft.hpp"
#include "dekf/siso.hpp"
#include "doctest.h"

using namespace dekf;

namespace {

// Small FOIPTD keyset around the reference lateral loop; cheap to build.
KeyProcessSet small_lateral_set(bool verify) {
  ParamBounds b = ParamBounds::around(SisoParams::reference_lateral(), 1.5);
  GridSpec g;
  g.n_tau = 7;
  g.n_verify = 20;
  g.run_verification = verify;
  return build_key_processes(SisoKind::FOIPTD, b, g, 0.73);
}

}  // namespace

TEST_CASE("keyset build satisfies the covering criterion on random plants") {
  // Verification is part of the build: it samples plants log-uniformly in
  // the bounds and requires min-entry sensitivity J < 10% for each.
  const KeyProcessSet set = small_lateral_set(true);
  CHECK(set.entries.size() == 7);
  for (const auto& e : set.entries) {
    CHECK(e.t_cyc_norm > 0.0);
    CHECK(e.amp_norm > 0.0);
    CHECK(e.ref_y.size() == 256);
    CHECK(e.gains_norm.kp > 0.0);
  }
}

TEST_CASE("classify_cycle recovers a known plant from its limit cycle") {
  const KeyProcessSet set = small_lateral_set(false);

  // Simulate MRFT on a plant inside the bounds (scaled gain and time) and
  // check the recovered parameters against the truth.
  const SisoParams truth = SisoParams::foiptd(8.0, 1.4, 0.07);
  MrftConfig cfg;
  cfg.h = 0.4;
  cfg.beta = 0.73;
  SisoSim sim(truth, 1e-3);
  const RawWaveforms w = run_mrft_loop(
      [&](double u) { return sim.step(u); }, cfg, 120.0, 1e-3);
  const LimitCycle c = extract_steady_cycle(w, cfg);
  const FeatureVector f =
      normalize_and_pad(fit_cycle(c, 4096), 4096);
  const ClassifyResult r = classify_cycle(f, set);
  CHECK(r.score > 0.999);
  CHECK(r.recovered.k_eq == doctest::Approx(truth.k_eq).epsilon(0.10));
  CHECK(r.recovered.t_drag == doctest::Approx(truth.t_drag).epsilon(0.15));
  // tau is quantized to the grid; just require the right decade.
  CHECK(r.recovered.tau > truth.tau / 3.0);
  CHECK(r.recovered.tau < truth.tau * 3.0);
}

TEST_CASE("classification is invariant to gain and time scaling") {
  // Two plants related by pure scaling produce the same grid entry.
  const KeyProcessSet set = small_lateral_set(false);
  auto classify = [&](const SisoParams& p, double h) {
    MrftConfig cfg;
    cfg.h = h;
    cfg.beta = 0.73;
    SisoSim sim(p, 1e-3);
    const RawWaveforms w = run_mrft_loop(
        [&](double u) { return sim.step(u); }, cfg, 150.0, 1e-3);
    const LimitCycle c = extract_steady_cycle(w, cfg);
    return classify_cycle(normalize_and_pad(fit_cycle(c, 4096), 4096), set);
  };
  const double r_tau = 0.05;
  const ClassifyResult a =
      classify(SisoParams::foiptd(10.0, 1.0, r_tau), 0.3);
  const ClassifyResult b =
      classify(SisoParams::foiptd(5.0, 1.5, 1.5 * r_tau), 0.7);
  CHECK(a.index == b.index);
}

TEST_CASE("keyset JSON roundtrip preserves every field") {
  const KeyProcessSet set = small_lateral_set(false);
  const std::string path =
      (std::filesystem::temp_directory_path() / "dekf_keyset_rt.json")
          .string();
  save_keyset(set, path);
  const KeyProcessSet back = load_keyset(path);
  std::remove(path.c_str());

  CHECK(back.version == set.version);
  CHECK(back.kind == set.kind);
  CHECK(back.beta == set.beta);
  CHECK(back.grid.n_tau == set.grid.n_tau);
  CHECK(back.bounds.t_drag_min == set.bounds.t_drag_min);
  CHECK(back.bounds.tau_max == set.bounds.tau_max);
  REQUIRE(back.entries.size() == set.entries.size());
  for (std::size_t k = 0; k < set.entries.size(); ++k) {
    const auto& e0 = set.entries[k];
    const auto& e1 = back.entries[k];
    CHECK(e1.r_tau == e0.r_tau);
    CHECK(e1.gains_norm.kp == e0.gains_norm.kp);
    CHECK(e1.gains_norm.kd == e0.gains_norm.kd);
    CHECK(e1.t_cyc_norm == e0.t_cyc_norm);
    CHECK(e1.amp_norm == e0.amp_norm);
    REQUIRE(e1.ref_y.size() == e0.ref_y.size());
    for (std::size_t i = 0; i < e0.ref_y.size(); ++i) {
      CHECK(e1.ref_y[i] == e0.ref_y[i]);
    }
  }
}

TEST_CASE("unsupported keyset version is rejected") {
  KeyProcessSet set = small_lateral_set(false);
  nlohmann::json j = keyset_to_json(set);
  j["version"] = 2;
  CHECK_THROWS_AS(keyset_from_json(j), ConfigError);
}

TEST_CASE("classify_cycle on an empty set throws") {
  KeyProcessSet empty;
  FeatureVector f;
  f.cycle_len = 4;
  f.y = {0.0, 1.0, 0.0, -1.0};
  f.u = {1.0, 1.0, -1.0, -1.0};
  CHECK_THROWS_AS(classify_cycle(f, empty), ConfigError);
}

TEST_CASE("covering criterion failure raises GridTooCoarseError") {
  // A single-entry grid cannot cover a 4x-wide delay range.
  ParamBounds b = ParamBounds::around(SisoParams::reference_lateral(), 2.0);
  GridSpec g;
  g.n_tau = 1;
  g.n_verify = 30;
  g.run_verification = true;
  CHECK_THROWS_AS(build_key_processes(SisoKind::FOIPTD, b, g, 0.73),
                  GridTooCoarseError);
}
