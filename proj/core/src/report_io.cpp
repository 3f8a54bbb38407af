#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qfb/serialize.hpp"

namespace qfb {

using json = nlohmann::ordered_json;

namespace {

std::string record_str(const MeasurementRecord& r, char sep = '|') {
  std::string s;
  for (size_t i = 0; i < r.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(r[i]);
  }
  return s;
}

json tree_node_to_json(const TreeStrategyNode& node) {
  json out;
  out["control_index"] = node.control_index;
  out["value"] = node.value;
  json children = json::object();
  for (const auto& [label, child] : node.children) {
    children[std::to_string(label)] = tree_node_to_json(child);
  }
  out["children"] = std::move(children);
  return out;
}

TreeStrategyNode tree_node_from_json(const json& j, const std::string& loc) {
  if (!j.is_object()) throw SchemaError("expected a strategy node object", loc);
  TreeStrategyNode node;
  if (j.contains("control_index")) node.control_index = j["control_index"].get<int>();
  if (j.contains("value")) node.value = j["value"].get<double>();
  if (j.contains("children")) {
    if (!j["children"].is_object()) throw SchemaError("children must be an object", loc);
    for (const auto& [key, value] : j["children"].items()) {
      int label = 0;
      try {
        label = std::stoi(key);
      } catch (const std::exception&) {
        throw SchemaError("outcome key \"" + key + "\" is not an integer", loc + "/children");
      }
      node.children.emplace(label, tree_node_from_json(value, loc + "/children/" + key));
    }
  }
  return node;
}

json strategy_to_json_value(const Strategy& strategy) {
  json out;
  if (std::holds_alternative<TreeStrategy>(strategy)) {
    out["form"] = "tree";
    out["root"] = tree_node_to_json(std::get<TreeStrategy>(strategy).root);
  } else {
    const TableStrategy& table = std::get<TableStrategy>(strategy);
    out["form"] = "table";
    out["initial_control"] = table.initial_control;
    json policy = json::array();
    for (const auto& stage_map : table.policy) {
      json row = json::object();
      for (const auto& [outcome, control] : stage_map) {
        row[std::to_string(outcome)] = control;
      }
      policy.push_back(std::move(row));
    }
    out["policy"] = std::move(policy);
  }
  return out;
}

Strategy strategy_from_json_value(const json& j) {
  if (!j.is_object()) throw SchemaError("strategy must be a JSON object");
  const auto form_it = j.find("form");
  if (form_it == j.end()) throw SchemaError("strategy needs a \"form\" member", "form");
  const std::string form = form_it->get<std::string>();
  if (form == "tree") {
    const auto root_it = j.find("root");
    if (root_it == j.end()) throw SchemaError("tree strategy needs a \"root\"", "root");
    return TreeStrategy{tree_node_from_json(*root_it, "root")};
  }
  if (form == "table") {
    TableStrategy table;
    if (j.contains("initial_control")) table.initial_control = j["initial_control"].get<int>();
    if (j.contains("policy")) {
      const json& policy = j["policy"];
      if (!policy.is_array()) throw SchemaError("policy must be an array", "policy");
      for (size_t k = 0; k < policy.size(); ++k) {
        if (!policy[k].is_object()) {
          throw SchemaError("policy entries must be objects", "policy/" + std::to_string(k));
        }
        std::map<int, int> row;
        for (const auto& [key, value] : policy[k].items()) {
          try {
            row[std::stoi(key)] = value.get<int>();
          } catch (const std::exception&) {
            throw SchemaError("outcome key \"" + key + "\" is not an integer",
                              "policy/" + std::to_string(k));
          }
        }
        table.policy.push_back(std::move(row));
      }
    }
    return table;
  }
  throw SchemaError("unknown strategy form \"" + form + "\"", "form");
}

json state_to_json(const std::variant<Ket, DensityOperator>& state) {
  json out;
  if (std::holds_alternative<Ket>(state)) {
    const ComplexVector& v = std::get<Ket>(state).amplitudes();
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      re.push_back(v[i].real());
      im.push_back(v[i].imag());
    }
    out["ket"] = json{{"re", std::move(re)}, {"im", std::move(im)}};
  } else {
    const ComplexMatrix& m = std::get<DensityOperator>(state).matrix();
    json re = json::array();
    json im = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        re.push_back(m(r, c).real());
        im.push_back(m(r, c).imag());
      }
    }
    out["density"] =
        json{{"rows", m.rows()}, {"cols", m.cols()}, {"re", std::move(re)}, {"im", std::move(im)}};
  }
  return out;
}

void append_amplitudes_csv(std::ostringstream& os, const std::variant<Ket, DensityOperator>& state) {
  if (std::holds_alternative<Ket>(state)) {
    const ComplexVector& v = std::get<Ket>(state).amplitudes();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      os << "," << v[i].real() << "," << v[i].imag();
    }
  } else {
    const ComplexMatrix& m = std::get<DensityOperator>(state).matrix();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        os << "," << m(r, c).real() << "," << m(r, c).imag();
      }
    }
  }
}

json posterior_node_to_json(const PosteriorNode& node) {
  json out;
  out["prefix"] = node.prefix;
  out["probability"] = node.probability;
  const ComplexVector& v = node.state.amplitudes();
  json re = json::array();
  json im = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re.push_back(v[i].real());
    im.push_back(v[i].imag());
  }
  out["ket"] = json{{"re", std::move(re)}, {"im", std::move(im)}};
  json children = json::array();
  for (const PosteriorNode& child : node.children) {
    children.push_back(posterior_node_to_json(child));
  }
  out["children"] = std::move(children);
  return out;
}

void posterior_node_to_csv(std::ostringstream& os, const PosteriorNode& node) {
  os << record_str(node.prefix) << "," << node.probability;
  const ComplexVector& v = node.state.amplitudes();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << "," << v[i].real() << "," << v[i].imag();
  }
  os << "\n";
  for (const PosteriorNode& child : node.children) posterior_node_to_csv(os, child);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string strategy_to_json(const Strategy& strategy) {
  return dump(strategy_to_json_value(strategy));
}

Strategy parse_strategy_string(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (root.is_object() && root.contains("strategy")) {
    return strategy_from_json_value(root["strategy"]);  // accept whole solve reports
  }
  return strategy_from_json_value(root);
}

Strategy parse_strategy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open strategy file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_strategy_string(buffer.str());
}

std::string solve_report_to_json(const SolveReport& report) {
  json out;
  out["value"] = report.value;
  out["nodes_expanded"] = report.nodes_expanded;
  out["pruned_mass"] = report.pruned_mass;
  out["strategy"] = strategy_to_json_value(report.strategy);
  if (report.tables) {
    json tables;
    tables["initial_value"] = report.tables->initial_value;
    json stages = json::array();
    for (size_t k = 0; k < report.tables->after_stage.size(); ++k) {
      json row;
      row["stage"] = k;
      json values = json::object();
      const auto& labels = report.tables->outcome_labels[k];
      for (size_t i = 0; i < report.tables->after_stage[k].size(); ++i) {
        values[std::to_string(labels[i])] = report.tables->after_stage[k][i];
      }
      row["cost_to_go"] = std::move(values);
      stages.push_back(std::move(row));
    }
    tables["after_stage"] = std::move(stages);
    out["value_tables"] = std::move(tables);
  }
  return dump(out);
}

std::string solve_report_tables_to_csv(const SolveReport& report) {
  if (!report.tables) {
    throw UsageError("CSV value tables are only available for the complete-measurement solver");
  }
  std::ostringstream os;
  os << "stage,outcome,cost_to_go\n";
  for (size_t k = 0; k < report.tables->after_stage.size(); ++k) {
    const auto& labels = report.tables->outcome_labels[k];
    for (size_t i = 0; i < report.tables->after_stage[k].size(); ++i) {
      os << k << "," << labels[i] << "," << report.tables->after_stage[k][i] << "\n";
    }
  }
  return os.str();
}

std::string sim_result_to_json(const SimResult& result) {
  json out;
  out["n"] = result.n;
  out["seed"] = result.seed;
  out["mean_risk"] = result.mean_risk;
  out["std_error"] = result.std_error;
  json freq = json::array();
  for (size_t k = 0; k < result.outcome_counts.size(); ++k) {
    json row;
    row["stage"] = k;
    json counts = json::object();
    json frequencies = json::object();
    for (const auto& [label, count] : result.outcome_counts[k]) {
      counts[std::to_string(label)] = count;
      frequencies[std::to_string(label)] =
          static_cast<double>(count) / static_cast<double>(result.n);
    }
    row["counts"] = std::move(counts);
    row["frequencies"] = std::move(frequencies);
    freq.push_back(std::move(row));
  }
  out["stage_outcome_frequencies"] = std::move(freq);
  if (!result.trajectories.empty()) {
    json list = json::array();
    for (const TrajectoryResult& t : result.trajectories) {
      list.push_back(json{{"record", t.record}, {"cost", t.cost}});
    }
    out["trajectories"] = std::move(list);
  }
  return dump(out);
}

std::string sim_result_to_csv(const SimResult& result) {
  std::ostringstream os;
  os << "n,seed,mean_risk,std_error\n";
  os << result.n << "," << result.seed << "," << result.mean_risk << "," << result.std_error
     << "\n";
  os << "stage,outcome,count,frequency\n";
  for (size_t k = 0; k < result.outcome_counts.size(); ++k) {
    for (const auto& [label, count] : result.outcome_counts[k]) {
      os << k << "," << label << "," << count << ","
         << static_cast<double>(count) / static_cast<double>(result.n) << "\n";
    }
  }
  return os.str();
}

std::string trajectories_to_csv(const SimResult& result) {
  std::ostringstream os;
  os << "record,cost\n";
  for (const TrajectoryResult& t : result.trajectories) {
    os << record_str(t.record) << "," << t.cost << "\n";
  }
  return os.str();
}

std::string filtered_trajectory_to_json(const FilteredTrajectory& t,
                                        const MeasurementRecord& record) {
  json out;
  out["record"] = record;
  out["probability"] = t.probability;
  json stages = json::array();
  for (size_t k = 0; k < t.states.size(); ++k) {
    json row;
    row["stage"] = k;
    row["outcome"] = record[k];
    row["probability"] = t.stage_probs[k];
    row["state"] = state_to_json(t.states[k]);
    stages.push_back(std::move(row));
  }
  out["stages"] = std::move(stages);
  return dump(out);
}

std::string filtered_trajectory_to_csv(const FilteredTrajectory& t,
                                       const MeasurementRecord& record) {
  std::ostringstream os;
  os << "record,probability,state_re_im_interleaved\n";
  MeasurementRecord prefix;
  double cumulative = 1.0;
  for (size_t k = 0; k < t.states.size(); ++k) {
    prefix.push_back(record[k]);
    cumulative *= t.stage_probs[k];
    os << record_str(prefix) << "," << cumulative;
    append_amplitudes_csv(os, t.states[k]);
    os << "\n";
  }
  return os.str();
}

std::string posterior_tree_to_json(const PosteriorTree& tree) {
  json out;
  out["pruned_mass"] = tree.pruned_mass;
  out["node_count"] = tree.node_count;
  out["root"] = posterior_node_to_json(tree.root);
  return dump(out);
}

std::string posterior_tree_to_csv(const PosteriorTree& tree) {
  std::ostringstream os;
  os << "record,probability,ket_re_im_interleaved\n";
  posterior_node_to_csv(os, tree.root);
  return os.str();
}

std::string kernels_to_json(const Scenario& s, const std::vector<TransitionKernel>& kernels) {
  json out = json::array();
  for (const TransitionKernel& kernel : kernels) {
    json row;
    row["stage"] = kernel.stage;
    row["source_outcomes"] = kernel.source_outcomes;
    row["target_outcomes"] = kernel.target_outcomes;
    json controls = json::array();
    const StageSpec& grid_stage = s.stages[static_cast<size_t>(kernel.stage + 1)];
    for (size_t ui = 0; ui < kernel.matrices.size(); ++ui) {
      json jc;
      jc["control_index"] = ui;
      json ju = json::array();
      const ControlVector& u = grid_stage.control_grid[ui];
      for (Eigen::Index i = 0; i < u.size(); ++i) ju.push_back(u[i]);
      jc["control"] = std::move(ju);
      json m = json::array();
      for (Eigen::Index r = 0; r < kernel.matrices[ui].rows(); ++r) {
        json jrow = json::array();
        for (Eigen::Index c = 0; c < kernel.matrices[ui].cols(); ++c) {
          jrow.push_back(kernel.matrices[ui](r, c));
        }
        m.push_back(std::move(jrow));
      }
      jc["matrix"] = std::move(m);
      controls.push_back(std::move(jc));
    }
    row["controls"] = std::move(controls);
    out.push_back(std::move(row));
  }
  return dump(out);
}

std::string kernels_to_csv(const std::vector<TransitionKernel>& kernels) {
  std::ostringstream os;
  os << "stage,control_index,source,target,probability\n";
  for (const TransitionKernel& kernel : kernels) {
    for (size_t ui = 0; ui < kernel.matrices.size(); ++ui) {
      for (Eigen::Index r = 0; r < kernel.matrices[ui].rows(); ++r) {
        for (Eigen::Index c = 0; c < kernel.matrices[ui].cols(); ++c) {
          os << kernel.stage << "," << ui << "," << kernel.source_outcomes[static_cast<size_t>(r)]
             << "," << kernel.target_outcomes[static_cast<size_t>(c)] << ","
             << kernel.matrices[ui](r, c) << "\n";
        }
      }
    }
  }
  return os.str();
}

std::string scenario_validation_json(const Scenario& s) {
  json checks = json::array();
  bool all_pass = true;
  auto add = [&](const std::string& name, const std::string& loc, double residual,
                 double tolerance, bool pass) {
    checks.push_back(json{{"name", name},
                          {"location", loc},
                          {"residual", residual},
                          {"tolerance", tolerance},
                          {"pass", pass}});
    all_pass = all_pass && pass;
  };

  {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(s.terminal.matrix(), Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    add("terminal_psd_min_eigenvalue", "terminal", min_eig, -s.tol.psd, min_eig >= -s.tol.psd);
  }
  if (s.initial_is_ket()) {
    const double res = std::abs(std::get<Ket>(s.initial).amplitudes().norm() - 1.0);
    add("initial_norm", "initial/ket", res, s.tol.norm, res <= s.tol.norm);
  } else {
    const double res = std::abs(std::get<DensityOperator>(s.initial).matrix().trace().real() - 1.0);
    add("initial_trace", "initial/density", res, s.tol.norm, res <= s.tol.norm);
  }

  for (size_t k = 0; k < s.stages.size(); ++k) {
    const StageSpec& stage = s.stages[k];
    const std::string loc = "stages/" + std::to_string(k);
    ComplexMatrix sum = ComplexMatrix::Zero(s.dim, s.dim);
    for (const Projector& e : stage.measurement) sum += e.matrix();
    const double res = max_abs(sum - ComplexMatrix::Identity(s.dim, s.dim));
    add("projector_resolution", loc + "/projectors", res, s.tol.norm, res <= s.tol.norm);

    for (size_t ui = 0; ui < stage.control_grid.size(); ++ui) {
      const std::string uloc = loc + "/control_grid/" + std::to_string(ui);
      const ComplexMatrix t =
          stage_propagator(s.hamiltonian, stage.control_grid[ui], stage.duration, s.tol);
      const double unit = max_abs(t.adjoint() * t - ComplexMatrix::Identity(s.dim, s.dim));
      add("propagator_unitarity", uloc, unit, s.tol.unitarity, unit <= s.tol.unitarity);

      const Instrument ins =
          stage_instrument(s.hamiltonian, stage, stage.control_grid[ui], s.tol);
      const InstrumentValidation v = validate_instrument(ins);
      add("instrument_normalization", uloc, v.normalization_residual, s.tol.normalization,
          v.normalization_residual <= s.tol.normalization);
      add("instrument_choi_min_eigenvalue", uloc, v.cp.min_choi_eigenvalue, -s.tol.psd,
          v.cp.pass);
    }
  }

  json out;
  out["pass"] = all_pass;
  out["checks"] = std::move(checks);
  return dump(out);
}

}  // namespace qfb
