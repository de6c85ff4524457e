#include <CLI11.hpp>
#include <iostream>

#include "gdnls/harness.hpp"

namespace h = gdnls::harness;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "TOML experiment file");
  sub->add_option("--set", o.sets, "override a field, e.g. grid.num_points=2048")->take_all();
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--seed", o.seed, "seed for random inputs");
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::NonNegativeNumber);
}

h::ExperimentSpec build(const Options& o, const CLI::App* sub, std::optional<h::Kind> kind) {
  std::optional<std::uint64_t> seed;
  if (sub->count("--seed")) seed = o.seed;
  std::optional<std::string> out;
  if (!o.out.empty()) out = o.out;
  return h::load_spec(o.config, o.sets, kind, seed, out);
}

void print_violations(const std::vector<std::string>& v) {
  nlohmann::json j;
  j["status"] = "validation-failure";
  j["violations"] = v;
  std::cerr << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments for the generalized derivative NLS"};
  app.require_subcommand(1);
  Options opt;
  std::vector<std::pair<CLI::App*, std::optional<h::Kind>>> subs;
  for (const auto& [kind, name] : h::kind_names()) {
    auto* sub = app.add_subcommand(name, "run a " + name + " experiment");
    add_common(sub, opt);
    subs.emplace_back(sub, kind);
  }
  auto* val = app.add_subcommand("validate", "check a configuration without running it");
  add_common(val, opt);
  subs.emplace_back(val, std::nullopt);

  CLI11_PARSE(app, argc, argv);
  if (opt.threads > 0) gdnls::set_num_threads(opt.threads);

  for (auto& [sub, kind] : subs) {
    if (!sub->parsed()) continue;
    h::ExperimentSpec spec;
    try {
      spec = build(opt, sub, kind);
    } catch (const std::exception& e) {
      print_violations({e.what()});
      return 2;
    }
    if (!kind) {
      const auto v = h::validate_spec(spec);
      if (!v.empty()) {
        print_violations(v);
        return 2;
      }
      std::cout << "{\"status\": \"valid\", \"kind\": \"" << h::kind_name(spec.kind) << "\"}\n";
      return 0;
    }
    try {
      const h::RunResult r = h::run_experiment(spec);
      std::cout << r.report.dump(2) << '\n';
      return r.exit_code;
    } catch (const std::exception& e) {
      nlohmann::json j{{"status", "numerical-failure"}, {"reason", e.what()}};
      std::cerr << j.dump(2) << '\n';
      return 3;
    }
  }
  return 2;
}
