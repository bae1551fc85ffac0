// acila: run a scenario file and report entry counts, plan diffs and traces.

#include "acila/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace acila;
using namespace acila::cli;

int main(int argc, char** argv) {
  CLI::App app{"Run an acila scenario and report entry counts"};
  app.set_version_flag("--version", "acila 0.1");

  std::string scenario_path;
  std::string out_path;
  std::optional<double> scale;
  std::uint64_t seed = 1;
  Format format = Format::human;
  std::optional<FilterMode> filter_mode;
  bool strict = true;
  std::optional<std::string> inject_fault;

  const std::map<std::string, Format> formats{
      {"csv", Format::csv}, {"human", Format::human}, {"trace-lines", Format::trace_lines}};
  const std::map<std::string, FilterMode> modes{
      {"gateway", FilterMode::gateway}, {"gateway+fabric", FilterMode::gateway_and_fabric}};

  app.add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  app.add_option("--format", format, "Output format")->transform(CLI::CheckedTransformer(formats));
  app.add_option("--out", out_path, "Write the report here instead of stdout");
  app.add_option("--scale", scale, "Assumption generator scale (alpha)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for connection replay order");
  app.add_option("--filter-mode", filter_mode, "Where filtering happens")
      ->transform(CLI::CheckedTransformer(modes));
  app.add_flag("--strict-crosscheck,!--no-strict-crosscheck", strict,
               "Exit 2 when analytic and concrete counts disagree (default on)");
  app.add_option("--inject-fault", inject_fault, "Perturb concrete counts on this device (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitValidation;
  }

  RunReport report;
  try {
    const auto sf = load_scenario(scenario_path);
    report = run(sf, {scale, seed, filter_mode, strict, inject_fault});
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << scenario_path << ": " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (out_path.empty())
      std::cout << emit(report, format);
    else
      emit_to(report, format, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  const auto failures = report.failures();
  for (const auto& f : failures)
    std::cerr << "crosscheck mismatch: device=" << f.device << " metric=" << f.metric
              << " analytic=" << f.analytic << " concrete=" << f.concrete << '\n';
  if (!failures.empty() && strict)
    return kExitCrossCheck;
  return kExitPass;
}
