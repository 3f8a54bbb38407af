// qfb — command-line front end: scenario ingestion, solver/filter/simulation
// dispatch, JSON/CSV emission. Exit codes: 0 success, 1 domain error, 2 usage
// error. Diagnostics go to stderr as a single machine-parsable JSON line.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfb/serialize.hpp"

namespace {

void emit_error(const std::string& code, const std::string& message,
                const std::string& location) {
  // Single-line JSON so scripts can parse failures without a JSON library.
  std::ostringstream os;
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') {
        out += '\\';
        out += c;
      } else if (c == '\n') {
        out += "\\n";
      } else {
        out += c;
      }
    }
    return out;
  };
  os << "{\"code\":\"" << escape(code) << "\",\"message\":\"" << escape(message)
     << "\",\"location\":\"" << escape(location) << "\"}";
  std::cerr << os.str() << std::endl;
}

void write_output(const std::string& out_path, const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw qfb::IoError("cannot open output file: " + out_path);
  out << payload;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw qfb::UsageError(what + ": \"" + item + "\" is not an integer");
    }
  }
  return out;
}

std::vector<qfb::ControlVector> controls_from_indices(const qfb::Scenario& s,
                                                      const std::vector<int>& indices,
                                                      size_t count, int from_stage) {
  std::vector<qfb::ControlVector> controls;
  for (size_t i = 0; i < count; ++i) {
    const size_t stage = static_cast<size_t>(from_stage) + i;
    const int idx = i < indices.size() ? indices[i] : 0;
    const auto& grid = s.stages.at(stage).control_grid;
    if (idx < 0 || static_cast<size_t>(idx) >= grid.size()) {
      throw qfb::ConfigError("control index " + std::to_string(idx) +
                             " outside stage " + std::to_string(stage) + "'s grid");
    }
    controls.push_back(grid[static_cast<size_t>(idx)]);
  }
  return controls;
}

struct Options {
  std::string scenario_path;
  std::string out_path;
  std::string format = "json";
  std::string strategy_path;
  std::string record;
  std::string controls;
  std::string trajectories_path;
  long long n = 10000;
  uint64_t seed = 0;
  int stage = -1;
  int from_stage = 0;
  bool keep_trajectories = false;
};

void require_json_format(const Options& opt, const std::string& command) {
  if (opt.format != "json") {
    throw qfb::UsageError(command + " only supports --format json");
  }
}

int run_command(const std::string& command, const Options& opt) {
  const qfb::Scenario scenario = qfb::parse_scenario_file(opt.scenario_path);

  if (command == "validate") {
    require_json_format(opt, "validate");
    write_output(opt.out_path, qfb::scenario_validation_json(scenario));
    return 0;
  }

  if (command == "solve") {
    require_json_format(opt, "solve");
    const qfb::SolveReport report = qfb::bellman_ket(scenario, scenario.initial_ket());
    write_output(opt.out_path, qfb::solve_report_to_json(report));
    return 0;
  }

  if (command == "solve-complete") {
    const qfb::SolveReport report = qfb::bellman_complete(scenario);
    write_output(opt.out_path, opt.format == "csv" ? qfb::solve_report_tables_to_csv(report)
                                                   : qfb::solve_report_to_json(report));
    return 0;
  }

  if (command == "oracle") {
    require_json_format(opt, "oracle");
    const qfb::SolveReport report =
        qfb::enumerate_strategies_oracle(scenario, scenario.initial_ket());
    write_output(opt.out_path, qfb::solve_report_to_json(report));
    return 0;
  }

  if (command == "filter") {
    const std::vector<int> control_indices = parse_int_list(opt.controls, "--controls");
    if (!opt.record.empty()) {
      const qfb::MeasurementRecord record = parse_int_list(opt.record, "--record");
      const auto controls = controls_from_indices(scenario, control_indices, record.size(), 0);
      const qfb::FilteredTrajectory t = qfb::filter_trajectory(scenario, controls, record);
      write_output(opt.out_path, opt.format == "csv"
                                     ? qfb::filtered_trajectory_to_csv(t, record)
                                     : qfb::filtered_trajectory_to_json(t, record));
      return 0;
    }
    const size_t remaining = static_cast<size_t>(scenario.num_stages() - opt.from_stage);
    const auto controls =
        controls_from_indices(scenario, control_indices, remaining, opt.from_stage);
    const qfb::PosteriorTree tree =
        qfb::reachable_posteriors(scenario, opt.from_stage, scenario.initial_ket(), controls);
    write_output(opt.out_path, opt.format == "csv" ? qfb::posterior_tree_to_csv(tree)
                                                   : qfb::posterior_tree_to_json(tree));
    return 0;
  }

  if (command == "kernel") {
    std::vector<qfb::TransitionKernel> kernels;
    if (opt.stage >= 0) {
      kernels.push_back(qfb::complete_measurement_kernel(scenario, opt.stage));
    } else {
      for (int k = 0; k + 1 < scenario.num_stages(); ++k) {
        kernels.push_back(qfb::complete_measurement_kernel(scenario, k));
      }
    }
    write_output(opt.out_path, opt.format == "csv" ? qfb::kernels_to_csv(kernels)
                                                   : qfb::kernels_to_json(scenario, kernels));
    return 0;
  }

  if (command == "simulate") {
    if (opt.strategy_path.empty()) {
      throw qfb::UsageError("simulate requires --strategy PATH");
    }
    const qfb::Strategy strategy = qfb::parse_strategy_file(opt.strategy_path);
    qfb::SimConfig cfg;
    cfg.trajectories = opt.n;
    cfg.seed = opt.seed;
    cfg.keep_trajectories = opt.keep_trajectories || !opt.trajectories_path.empty();
    const qfb::SimResult result =
        qfb::estimate_risk(scenario, cfg, strategy, scenario.initial_ket());
    if (!opt.trajectories_path.empty()) {
      write_output(opt.trajectories_path, qfb::trajectories_to_csv(result));
    }
    qfb::SimResult to_emit = result;
    if (!opt.keep_trajectories) to_emit.trajectories.clear();
    write_output(opt.out_path, opt.format == "csv" ? qfb::sim_result_to_csv(to_emit)
                                                   : qfb::sim_result_to_json(to_emit));
    return 0;
  }

  throw qfb::UsageError("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qfb — measurement-feedback control of finite quantum systems"};
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::string> commands = {"validate", "solve",    "solve-complete", "oracle",
                                             "filter",   "simulate", "kernel"};
  for (const std::string& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("scenario", opt.scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", opt.out_path, "output path (default: stdout)");
    sub->add_option("--format", opt.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    if (name == "simulate") {
      sub->add_option("--n", opt.n, "number of trajectories");
      sub->add_option("--seed", opt.seed, "RNG seed");
      sub->add_option("--strategy", opt.strategy_path, "strategy JSON (or solve report)");
      sub->add_option("--trajectories", opt.trajectories_path,
                      "write per-trajectory record,cost CSV here");
      sub->add_flag("--keep-trajectories", opt.keep_trajectories,
                    "include per-trajectory data in the main output");
    }
    if (name == "filter") {
      sub->add_option("--record", opt.record, "comma-separated outcome record to filter");
      sub->add_option("--controls", opt.controls,
                      "comma-separated control-grid indices, one per stage (default 0)");
      sub->add_option("--from-stage", opt.from_stage, "start stage for the posterior tree");
    }
    if (name == "kernel") {
      sub->add_option("--stage", opt.stage, "emit only the kernel with this source stage");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("UsageError", e.what(), "");
    return 2;
  }

  try {
    return run_command(app.get_subcommands().front()->get_name(), opt);
  } catch (const qfb::UsageError& e) {
    emit_error(e.code(), e.what(), e.location());
    return 2;
  } catch (const qfb::Error& e) {
    emit_error(e.code(), e.what(), e.location());
    return 1;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what(), "");
    return 1;
  }
}
