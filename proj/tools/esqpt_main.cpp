// esqpt <subcommand> [--config file] [--out dir] [--cache dir] [--seed n]
//       [--threads n] [--no-plot] [--<key> <value> ...]
//
// Exit codes: 0 success, 1 configuration error, 2 some sweep tasks failed.

#include "esqpt/config.hpp"
#include "esqpt/experiments.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace {

// Remaining "--key value" / "--key=value" tokens become config overrides.
void apply_overrides(const std::vector<std::string>& extras, esqpt::Config& cfg) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) {
      throw esqpt::ConfigError("unexpected argument '" + tok + "'");
    }
    const std::string body = tok.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      cfg.set(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      cfg.set(body, extras[++i]);
    } else {
      throw esqpt::ConfigError("missing value for --" + body);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ESQPT memory lab experiment runner", "esqpt"};
  app.set_version_flag("--version", ESQPT_VERSION);
  app.allow_extras();

  std::string subcommand;
  std::string config_path;
  std::string out_dir = "results";
  std::string cache_dir;
  std::uint64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool no_plot = false;
  bool quiet = false;

  std::string names;
  for (const auto& n : esqpt::subcommand_names()) names += "\n  " + n + ": " + esqpt::subcommand_help(n);
  app.footer("Subcommands and their keys:" + names +
             "\n\nAny key may be given in the config file or as --<key> <value>.");

  app.add_option("subcommand", subcommand, "Experiment to run")->required();
  auto* cfg_opt = app.add_option("--config", config_path, "key = value configuration file");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* cache_opt = app.add_option("--cache", cache_dir, "Spectral cache directory (empty: no disk cache)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed for sampling");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-plot", no_plot, "Skip the SVG plot");
  app.add_flag("-q,--quiet", quiet, "No progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    esqpt::Config cfg;
    if (!config_path.empty()) cfg = esqpt::Config::load(config_path);
    apply_overrides(app.remaining(), cfg);

    // Command-line flags win over the same keys in the file.
    esqpt::RunOptions opts;
    opts.out_dir = out_opt->count() ? out_dir : cfg.get_string("out", out_dir);
    opts.cache_dir = cache_opt->count() ? cache_dir : cfg.get_string("cache", cache_dir);
    opts.seed = seed_opt->count() ? seed : cfg.get_u64("seed", seed);
    opts.threads = threads_opt->count() ? threads : static_cast<unsigned>(cfg.get_int("threads", threads));
    opts.plot = !no_plot && cfg.get_int("plot", 1) != 0;
    opts.log = quiet ? nullptr : &std::cerr;
    (void)cfg_opt;
    if (opts.threads < 1) throw esqpt::ConfigError("threads: need at least one");

    const auto report = esqpt::run_experiment(subcommand, cfg, opts);
    for (const auto& f : report.files) std::cout << f.string() << "\n";
    if (!report.failures.empty()) {
      std::cerr << report.failures.size() << " task(s) failed; see " << subcommand << ".errors.log\n";
    }
    return report.exit_code;
  } catch (const esqpt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const esqpt::OutputError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
