// slowrate: command-line front-end for the U-/V-statistic rate experiments.
//
//   slowrate sample   --config cfg --law Y|Z --count N [--n N] [--out file]
//   slowrate distance --config cfg --statistic v|u --law Y|Z [--out file]
//   slowrate rate     --config cfg [--out file] [--summary file] [--synthetic]
//   slowrate verify   --config cfg [--inject-fault kernel-sign]
//
// Exit codes: 0 success, 1 failed check, 2 validation, 3 budget,
// 4 numeric accuracy, 5 I/O.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "slowrate/cli.hpp"

namespace {

using namespace slowrate;
using namespace slowrate::cli;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_path, "key=value experiment config file");
  cmd->add_option("--out", common.out_path, "output file (default: config output_path or stdout)");
  cmd->add_option("--threads", common.threads, "worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", common.seed, "master seed, overrides the config");
}

ExperimentConfig resolve_config(const CommonOptions& common) {
  ExperimentConfig config =
      common.config_path.empty() ? ExperimentConfig{} : load_config(common.config_path);
  if (common.seed) {
    config.master_seed = *common.seed;
  }
  if (!common.out_path.empty()) {
    config.output_path = common.out_path;
  }
  return config;
}

// Opens config.output_path, or stdout when it is empty or "-".
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (path.empty() || path == "-") {
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) {
      throw IoError("cannot open output file '" + path + "'");
    }
  }

  std::ostream& stream() { return file_ ? *file_ : std::cout; }

  void finish(const std::string& path) {
    stream().flush();
    if (!stream()) {
      throw IoError("write failed for '" + (path.empty() ? std::string("stdout") : path) + "'");
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for slow U-/V-statistic approximation rates"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* sample_cmd = app.add_subcommand("sample", "write draws of Y or Z as CSV");
  add_common(sample_cmd, common);
  std::string law_text = "Y";
  std::int64_t count = 0;
  std::optional<std::int64_t> sample_n;
  sample_cmd->add_option("--law", law_text, "Y (heavy tailed) or Z (Gaussian)");
  sample_cmd->add_option("--count", count, "number of rows")->required();
  sample_cmd->add_option("--n", sample_n, "sample size fixing sigma_n (default: first n_grid)");

  auto* distance_cmd = app.add_subcommand("distance", "Kolmogorov distance per grid point");
  add_common(distance_cmd, common);
  std::string statistic_text = "v";
  distance_cmd->add_option("--statistic", statistic_text, "v or u");
  distance_cmd->add_option("--law", law_text, "Y or Z");

  auto* rate_cmd = app.add_subcommand("rate", "full rate experiment with fitted exponents");
  add_common(rate_cmd, common);
  std::string summary_path;
  bool synthetic = false;
  rate_cmd->add_option("--summary", summary_path, "JSON summary file (default: <out>.summary.json)");
  rate_cmd->add_flag("--synthetic", synthetic,
                     "replace every d_hat by n^(theoretical exponent); for testing the fit");

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant battery");
  add_common(verify_cmd, common);
  std::string fault_text = "none";
  verify_cmd->add_option("--inject-fault", fault_text, "none or kernel-sign (testing hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    const ExperimentConfig config = resolve_config(common);

    if (*sample_cmd) {
      validate(config);
      OutputTarget out(config.output_path);
      cmd_sample(config, sample_n.value_or(config.n_grid.front()), count, parse_law(law_text),
                 out.stream());
      out.finish(config.output_path);
      return kSuccess;
    }

    if (*distance_cmd) {
      OutputTarget out(config.output_path);
      const int code = cmd_distance(config, parse_statistic(statistic_text), parse_law(law_text),
                                    common.threads, out.stream(), std::cerr);
      out.finish(config.output_path);
      return code;
    }

    if (*rate_cmd) {
      validate(config);
      OutputTarget csv(config.output_path);
      std::string summary_target = summary_path;
      if (summary_target.empty() && !config.output_path.empty() && config.output_path != "-") {
        summary_target = config.output_path + ".summary.json";
      }
      OutputTarget summary(summary_target);
      const int code = cmd_rate(config, common.threads, synthetic, csv.stream(), summary.stream());
      csv.finish(config.output_path);
      summary.finish(summary_target);
      return code;
    }

    if (*verify_cmd) {
      Fault fault = Fault::None;
      if (fault_text == "kernel-sign") {
        fault = Fault::KernelSign;
      } else if (fault_text != "none") {
        throw ParameterError("unknown fault '" + fault_text + "'");
      }
      const auto outcome = run_verify(config, fault, common.threads);
      OutputTarget out(config.output_path);
      write_verify_report(outcome, out.stream());
      out.finish(config.output_path);
      return outcome.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kValidation;
}
