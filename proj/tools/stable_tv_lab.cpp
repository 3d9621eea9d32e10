// stable-tv-lab <campaign> --config <file> [--seed N] [--out DIR]
//
// Exit status: 0 when every check passes, 1 when some check fails, 2 for an
// invalid configuration, 3 for any other error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stvl/experiment.hpp"

namespace {

std::uint64_t parse_seed(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos, 0);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw stvl::ConfigError(where, "not a 64-bit unsigned integer: '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification campaigns for stable-driven SDEs"};
  std::string campaign;
  std::string config_path;
  std::string seed_text;
  std::string out_dir;
  unsigned workers = 0;
  std::vector<double> dims;
  std::vector<double> alphas;
  bool quiet = false;

  std::string names;
  for (const auto& n : stvl::campaign_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("campaign", campaign, "One of: " + names + " (poisson is an alias of poisson-rate)")->required();
  app.add_option("--config", config_path, "JSON file with campaign, seed, params, output_dir");
  app.add_option("--seed", seed_text, "Root seed; overrides STVL_SEED and the config");
  app.add_option("--out", out_dir, "Output directory; default out/<campaign>");
  app.add_option("--workers", workers, "Worker threads; overrides STVL_WORKERS");
  app.add_option("--d", dims, "constants: dimensions");
  app.add_option("--alpha", alphas, "Overrides params.alpha");
  app.add_flag("-q,--quiet", quiet, "Only print the summary line");
  CLI11_PARSE(app, argc, argv);

  try {
    stvl::Json file = config_path.empty() ? stvl::Json::object() : stvl::read_config_file(config_path);
    if (file.contains("campaign") && file["campaign"].get<std::string>() != campaign &&
        !(campaign == "poisson" && file["campaign"] == "poisson-rate"))
      throw stvl::ConfigError("campaign", "config is for '" + file["campaign"].get<std::string>() +
                                              "' but the command line asks for '" + campaign + "'");

    std::uint64_t seed = stvl::ExperimentConfig{}.seed;
    if (file.contains("seed")) seed = file["seed"].get<std::uint64_t>();
    if (const char* env = std::getenv("STVL_SEED")) seed = parse_seed(env, "STVL_SEED");
    if (!seed_text.empty()) seed = parse_seed(seed_text, "--seed");

    stvl::Json params = file.contains("params") ? file["params"] : stvl::Json::object();
    if (!dims.empty()) {
      if (campaign != "constants") throw stvl::ConfigError("--d", "only the constants campaign takes --d");
      params["d"] = dims;
    }
    if (!alphas.empty()) params["alpha"] = alphas;

    std::filesystem::path out = out_dir;
    if (out.empty()) out = file.contains("output_dir") ? file["output_dir"].get<std::string>() : "out/" + campaign;

    stvl::ExperimentConfig cfg = stvl::make_config(campaign, params, seed, out);
    cfg.workers = workers;
    const stvl::RunReport report = stvl::run_campaign(cfg);

    std::size_t failed = 0;
    for (const auto& c : report.checks) {
      if (!c.pass) ++failed;
      if (!quiet || !c.pass)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": value " << c.value << ", expected " << c.expected
                  << " (" << c.relation << " " << c.tolerance << ")" << (c.detail.empty() ? "" : " [" + c.detail + "]")
                  << '\n';
    }
    std::cout << cfg.campaign << ": " << report.checks.size() - failed << "/" << report.checks.size()
              << " checks passed; report in " << (out / "report.json").string() << '\n';
    return failed == 0 ? 0 : 1;
  } catch (const stvl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
