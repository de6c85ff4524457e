// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--out DIR] [--expect-fail 6,...]
// Exit status is 0 when the failing criteria are exactly the expected set.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "gdnls/harness.hpp"

using namespace gdnls;
namespace h = gdnls::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string config_path(const std::string& file) { return std::string(GDNLS_CONFIG_DIR) + "/" + file; }

h::RunResult run(const std::string& cfg, const fs::path& out, const std::vector<std::string>& overrides = {}) {
  h::ExperimentSpec s = h::load_spec(config_path(cfg), overrides);
  s.output_dir = out.string();
  return h::run_experiment(s);
}

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

Outcome closed_form() {
  const std::vector<std::pair<double, double>> regimes{{1.0, 0.8717797887081347}, {25.0, -9.797958971132712}};
  double worst = 0.0;
  for (double s : {1.0, 2.0, 2.5, 3.0})
    for (auto [w, c] : regimes) {
      const SolitonParams p{w, c, 0.0, 0.0, s};
      const SpatialGrid g = build_grid(s > 2.0 ? 4096 : 2048, 40.0);
      worst = std::max({worst, profile_ode_residual(p, g), phi_ode_residual(p, g)});
    }
  return {worst < 1e-8, "max ODE residual " + sci(worst)};
}

Outcome gauge_identities() {
  const SpatialGrid g = build_grid(1024, 30.0);
  double roundtrip = 0.0, modulus = 0.0, current = 0.0;
  std::vector<ComplexField> inputs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) inputs.push_back(random_localized_field(g, seed, 4.0, 16));
  for (double s : {1.0, 2.0, 2.5, 3.0}) {
    std::vector<ComplexField> all = inputs;
    all.push_back(soliton_field({1.0, 0.5, 0.0, 0.0, s}, 0.0, g));
    for (const auto& u : all) {
      const GaugePair p = to_gauge_pair(u, s);
      const ComplexField back = from_gauge_pair(p.phi, s);
      const CVec ux = spectral::derivative(u.values, g, 1);
      for (int m = 0; m < g.num_points; ++m) {
        roundtrip = std::max(roundtrip, std::abs(back[m] - u[m]));
        modulus = std::max(modulus, std::abs(std::abs(p.phi[m]) - std::abs(u[m])));
        current = std::max(current,
                           std::abs(std::imag(std::conj(u[m]) * ux[m]) - std::imag(std::conj(p.phi[m]) * p.psi[m])));
      }
    }
  }
  return {roundtrip < 1e-10 && modulus < 1e-10 && current < 1e-10,
          "roundtrip " + sci(roundtrip) + ", |phi|-|u| " + sci(modulus) + ", current " + sci(current)};
}

Outcome gq(const fs::path& out) {
  const auto r = run("gq_identity.toml", out);
  if (r.exit_code != 0) return {false, "run exited " + std::to_string(r.exit_code)};
  return {r.report["all_below_1e-9"].get<bool>(),
          std::to_string(r.report["cases"].size()) + " cases, max residual " +
              sci(r.report["max_residual"].get<double>())};
}

Outcome propagation(const fs::path& out) {
  const auto r = run("evolve.toml", out);
  if (r.exit_code != 0) return {false, "run exited " + std::to_string(r.exit_code)};
  const auto& sch = r.report["schemes"];
  double err = 0.0, drift = 0.0;
  for (const char* k : {"if-rk4", "split-step-gauge"}) {
    err = std::max(err, sch[k]["max_h1_error"].get<double>());
    drift = std::max(drift, sch[k]["relative_mass_drift"].get<double>());
  }
  // snapshots are 0.1 apart, so index 10 is t = 1
  const double gap = r.report["cross_scheme_h1_gap"][10].get<double>();
  return {err < 1e-4 && gap < 1e-6 && drift < 1e-8,
          "max H1 error " + sci(err) + ", gap(t=1) " + sci(gap) + ", mass drift " + sci(drift)};
}

Outcome chi_decay(const fs::path& out) {
  const auto r = run("chi_scan.toml", out);
  if (r.exit_code != 0) return {false, "run exited " + std::to_string(r.exit_code)};
  const auto& j = r.report;
  const bool ok = j["rate_at_least_lambda"].get<bool>() && j["tail_below_envelope"].get<bool>();
  return {ok, "fitted rate " + sci(j["fitted_rate"].get<double>()) + " vs lambda " + sci(j["lambda"].get<double>()) +
                  ", envelope onset t=" + sci(j["envelope_onset_time"].get<double>())};
}

Outcome family_scaling(const fs::path& out) {
  const auto r = run("condition_margin.toml", out);
  if (r.exit_code != 0) return {false, "run exited " + std::to_string(r.exit_code)};
  const auto& j = r.report;
  const bool ok = j["lhs_exponent_ok"].get<bool>() && j["v_star_exponent_ok"].get<bool>() &&
                  j["margin_exceeds_one"].get<bool>();
  return {ok, "lhs exponent " + sci(j["lhs_exponent"].get<double>()) + " (target 0.8; reduced bound " +
                  sci(j["reduced_bound_exponent"].get<double>()) + "), v* exponent " +
                  sci(j["v_star_exponent"].get<double>()) + ", margin " +
                  sci(j["rows"].front()["margin"].get<double>()) + " -> " +
                  sci(j["rows"].back()["margin"].get<double>())};
}

Outcome picard_contraction(const h::RunResult& r) {
  if (!r.report.contains("picard")) return {false, "run exited " + std::to_string(r.exit_code)};
  const auto& p = r.report["picard"];
  double worst = 0.0;
  for (const auto& q : p["contraction_ratios"]) worst = std::max(worst, q.get<double>());
  const double xn = p["final_x_norm"].get<double>();
  const bool restart = r.report.value("perturbed_restart_ok", false);
  const bool ok = p["converged"].get<bool>() && worst < 0.5 && xn <= 1.0 && restart;
  return {ok, std::to_string(p["iterations"].get<int>()) + " iterations, max ratio " + sci(worst) + ", x_norm " +
                  sci(xn) + ", restart drift " + sci(r.report.value("perturbed_restart_x_distance", NAN))};
}

Outcome construction(const h::RunResult& r) {
  if (r.exit_code != 0) return {false, "run exited " + std::to_string(r.exit_code)};
  const auto& j = r.report;
  const bool ok = j["rate_ok"].get<bool>() && j["pair_residual_within_budget"].get<bool>() &&
                  j["pair_residual_decreases"].get<bool>();
  return {ok, "rate " + sci(j["fitted_h1_rate"].get<double>()) + " >= " + sci(j["rate_threshold"].get<double>()) +
                  ", pair residual " + sci(j["pair_residual_max"].get<double>()) + " (coarse " +
                  sci(j["pair_residual_coarse_max"].get<double>()) + ", budget " +
                  sci(j["pair_residual_budget"].get<double>()) + ")"};
}

Outcome norms() {
  const SpatialGrid g = build_grid(128, 10.0);
  const TimeGrid tg = make_time_grid(1.0, 3.0, 19);
  auto field = [&](std::uint64_t seed) {
    SpaceTimeField f = SpaceTimeField::zeros(tg, g);
    for (std::size_t i = 0; i < f.num_nodes(); ++i) {
      f.first[i] = random_localized_field(g, seed * 1000 + 2 * i, 3.0, 12);
      f.second[i] = random_localized_field(g, seed * 1000 + 2 * i + 1, 3.0, 12);
    }
    return f;
  };
  const double lambda = 0.625;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  double worst_slack = INFINITY, worst_homog = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const SpaceTimeField a = scaled(field(3 * k + 1), coef(rng)), b = scaled(field(3 * k + 2), coef(rng));
    const double na = x_norm(a, tg.t_start, lambda), nb = x_norm(b, tg.t_start, lambda);
    worst_slack = std::min(worst_slack, na + nb - x_norm(axpy(a, 1.0, b), tg.t_start, lambda));
    const double s = coef(rng);
    worst_homog = std::max(worst_homog, std::abs(x_norm(scaled(a, s), tg.t_start, lambda) - std::abs(s) * na) / na);
  }
  const SpaceTimeField c = field(7);
  double max_l2 = 0.0;
  for (const auto& f : c.first) max_l2 = std::max(max_l2, spectral::lr_norm(f.values, g, 2.0));
  const double mixed = mixed_spacetime_norm(c.first, tg, kInf, 2.0);
  const double mixed_gap = std::abs(mixed - max_l2);
  return {worst_slack >= -1e-12 && worst_homog < 1e-14 && mixed_gap == 0.0,
          "triangle slack " + sci(worst_slack) + ", homogeneity " + sci(worst_homog) + ", (inf,2) gap " +
              sci(mixed_gap)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance run"};
  std::string out = "acceptance_out";
  std::string expect;
  app.add_option("--out", out);
  app.add_option("--expect-fail", expect, "comma-separated criteria known to fail");
  CLI11_PARSE(app, argc, argv);
  std::set<int> expected;
  {
    std::stringstream ss(expect);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) expected.insert(std::stoi(tok));
  }
  const fs::path root(out);

  h::RunResult construct;
  double construct_seconds = 0.0;
  auto full = [&]() -> const h::RunResult& {
    if (construct.status.empty()) {
      const auto t0 = std::chrono::steady_clock::now();
      construct = run("full_construct.toml", root / "full_construct");
      construct_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return construct;
  };

  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, 10, closed_form},
      {2, 5, gauge_identities},
      {3, 20, [&] { return gq(root / "gq_identity"); }},
      {4, 180, [&] { return propagation(root / "evolve"); }},
      {5, 60, [&] { return chi_decay(root / "chi_scan"); }},
      {6, 120, [&] { return family_scaling(root / "condition_margin"); }},
      {7, 600, [&] { return picard_contraction(full()); }},
      {8, 600, [&] { return construction(full()); }},
      {9, 5, norms},
  };

  std::set<int> failed;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // 7 and 8 share one construction run; each is charged its full time
    if (c.id == 7 || c.id == 8) secs = std::max(secs, construct_seconds);
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) failed.insert(c.id);
    std::printf("criterion %d: %s  %s; %.1f s (limit %.0f s)%s\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : " over time");
    std::fflush(stdout);
  }
  {
    // Informational: the sigma = 3 single-soliton example is linearly unstable.
    const auto t0 = std::chrono::steady_clock::now();
    const SpatialGrid g = build_grid(4096, 40.0);
    const SolitonParams p{2.0, -1.0, 0.0, 0.0, 3.0};
    const EvolutionConfig c = default_evolution_config(3.0, Scheme::IntegratingFactorRK4);
    const Trajectory tr = evolve(soliton_field(p, 0.0, g), make_time_grid(0.0, 5.0, 10), c);
    const RVec e = soliton_error_h1(tr, p);
    std::string seq;
    for (std::size_t i = 1; i < e.size(); i += 2) seq += (seq.empty() ? "" : ", ") + sci(e[i]);
    std::printf("info: sigma=3 (omega=2, c=-1) if-rk4 H1 error at t=0.5,1.5,..,4.5: %s; max %s vs 1e-4; %.1f s\n",
                seq.c_str(), sci(*std::max_element(e.begin(), e.end())).c_str(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  if (failed == expected) return 0;
  std::printf("failing set differs from the expected set\n");
  return 1;
}
