// Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 bad
// configuration or usage.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "cms/config.hpp"
#include "cms/errors.hpp"
#include "cms/log.hpp"
#include "cms/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string axis;
  std::optional<double> radius;
  std::optional<double> sigma;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> n0;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
};

void add_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "JSON run configuration");
  cmd.add_option("--axis", o.axis, "motion axis: Tx, Ty, Tz, Rx, Ry or Rz");
  cmd.add_option("--radius", o.radius, "attack and target radius (meters or radians)");
  cmd.add_option("--sigma", o.sigma, "smoothing sigma along --axis");
  cmd.add_option("--n", o.n, "estimation samples");
  cmd.add_option("--n0", o.n0, "selection samples");
  cmd.add_option("--alpha", o.alpha, "total failure probability");
  cmd.add_option("--seed", o.seed, "master seed");
  cmd.add_option("--workers", o.workers, "worker threads");
  cmd.add_option("--out", o.out, "output directory");
}

cms::RunConfig resolve(const Overrides& o) {
  cms::RunConfig c = o.config.empty() ? cms::RunConfig{} : cms::load_config(o.config);
  if (!o.axis.empty()) {
    try {
      c.axis = cms::parse_axis(o.axis);
    } catch (const cms::InvalidArgument&) {
      throw cms::ConfigError("--axis", "unknown axis '" + o.axis + "'");
    }
  }
  if (o.sigma) c.set_axis_sigma(*o.sigma);
  if (o.radius) c.radius = *o.radius;
  if (o.n) c.n = *o.n;
  if (o.n0) c.n0 = *o.n0;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (!o.out.empty()) c.out = o.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-motion smoothing: scenes, certificates and evaluation"};
  app.require_subcommand(1);
  Overrides o;
  const char* names[][2] = {{"gen-scene", "write scene PLYs and the pose manifest"},
                            {"render", "render image tensors and PNGs for a pose split"},
                            {"train", "fit and save the centroid classifier"},
                            {"certify", "write per-pose certificates"},
                            {"evaluate", "write metric CSVs and the radius sweep"},
                            {"report", "print the evaluation summary"}};
  for (auto& [name, help] : names) add_options(*app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const cms::RunConfig config = resolve(o);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-scene") {
      cms::run_gen_scene(config);
    } else if (cmd == "render") {
      cms::run_render(config);
    } else if (cmd == "train") {
      cms::run_train(config);
    } else if (cmd == "certify") {
      cms::run_certify(config);
    } else if (cmd == "evaluate") {
      cms::run_evaluate(config);
    } else {
      std::cout << cms::run_report(config);
    }
  } catch (const cms::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
