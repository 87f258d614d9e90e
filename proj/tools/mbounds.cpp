// mbounds: bounds and inference for indirect effects from a CSV file or cell counts.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbounds/analysis.hpp"
#include "mbounds/errors.hpp"

namespace {

enum Exit : int { ok = 0, internal = 1, config_error = 2, data_error = 3, incompatible = 4 };

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "median-gt" sets the default; "col=rule" entries override single columns.
void apply_dichotomize(const std::vector<std::string>& specs, mbounds::RunConfig& config) {
  for (const auto& spec : specs) {
    for (const auto& item : split(spec, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        config.default_rule = mbounds::DichotomizeRule::parse(item);
      } else {
        config.column_rules[item.substr(0, eq)] = mbounds::DichotomizeRule::parse(item.substr(eq + 1));
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharp bounds on average natural indirect effects for a binary treatment, mediator and outcome"};
  app.set_version_flag("--version", "mbounds 0.1.0");

  mbounds::RunConfig config;
  std::string mediators;
  std::vector<std::string> dichotomize;
  std::string assumptions = "none";
  std::string format = "json";
  std::vector<long long> counts;
  std::string output;

  app.add_option("--data", config.data_path, "CSV file with a header row")->check(CLI::ExistingFile);
  app.add_option("--treatment", config.treatment, "Treatment column");
  app.add_option("--outcome", config.outcome, "Outcome column");
  app.add_option("--mediators", mediators, "Comma-separated mediator columns");
  app.add_option("--dichotomize", dichotomize,
                 "none | median-gt | threshold:x, globally or as col=rule (comma list, repeatable)");
  app.add_option("--assumptions", assumptions, "Comma list of none, mmr, mmr-pos-mediator");
  app.add_option("--reference", config.reference, "Reference treatment level a in delta(a)")
      ->check(CLI::IsMember({0, 1}));
  app.add_option("--mediator-effect-sign", config.mediator_effect_sign,
                 "Sign of the average mediator effect under mmr-pos-mediator")
      ->check(CLI::IsMember({-1, 1}));
  app.add_option("--alpha", config.inference.alpha, "Two-sided level of the confidence intervals");
  app.add_option("--draws", config.inference.draws, "Monte Carlo draws for critical values");
  app.add_option("--seed", config.inference.seed, "Seed for the critical-value draws");
  app.add_option("--format", format, "json | csv | plotdata")
      ->check(CLI::IsMember({"json", "csv", "plotdata"}));
  app.add_option("--counts", counts, "n00a0,n01a0,n10a0,n11a0,n00a1,n01a1,n10a1,n11a1")
      ->delimiter(',')
      ->expected(8);
  app.add_flag("--strict", config.strict, "Exit with status 4 when any assumption set is incompatible");
  app.add_option("-o,--output", output, "Write the report here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Exit::ok : Exit::config_error;
  }

  try {
    config.mediators = split(mediators, ',');
    apply_dichotomize(dichotomize, config);
    config.assumptions.clear();
    for (const auto& a : split(assumptions, ',')) {
      try {
        config.assumptions.push_back(mbounds::parse_assumptions(a));
      } catch (const mbounds::ValidationError& e) {
        throw mbounds::ConfigError(e.what());
      }
    }
    config.format = format == "csv"        ? mbounds::OutputFormat::csv
                    : format == "plotdata" ? mbounds::OutputFormat::plotdata
                                           : mbounds::OutputFormat::json;
    if (!counts.empty()) {
      mbounds::CellCounts cc;
      for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] < 0) throw mbounds::ConfigError("counts must be nonnegative");
        cc.n[k] = static_cast<std::uint64_t>(counts[k]);
      }
      config.counts = cc;
    }

    const mbounds::AnalysisReport report = mbounds::run(config);
    const std::string text = mbounds::emit(report, config.format);
    if (output.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(output, std::ios::binary);
      if (!out) throw mbounds::ConfigError("cannot write '" + output + "'");
      out << text;
    }
    if (config.strict && report.any_incompatible()) {
      std::cerr << "mbounds: observed data are incompatible with a requested assumption set\n";
      return Exit::incompatible;
    }
    return Exit::ok;
  } catch (const mbounds::ConfigError& e) {
    std::cerr << "mbounds: config error: " << e.what() << "\n";
    return Exit::config_error;
  } catch (const mbounds::UnsupportedError& e) {
    std::cerr << "mbounds: config error: " << e.what() << "\n";
    return Exit::config_error;
  } catch (const mbounds::Error& e) {
    std::cerr << "mbounds: data error: " << e.what() << "\n";
    return Exit::data_error;
  } catch (const std::exception& e) {
    std::cerr << "mbounds: internal error: " << e.what() << "\n";
    return Exit::internal;
  }
}
