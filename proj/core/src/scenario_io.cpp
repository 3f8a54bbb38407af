#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qfb/serialize.hpp"

namespace qfb {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_error(const std::string& loc, const std::string& message) {
  throw SchemaError(message, loc);
}

const json& require_key(const json& j, const std::string& key, const std::string& loc) {
  const auto it = j.find(key);
  if (it == j.end()) schema_error(loc + "/" + key, "missing required field");
  return *it;
}

double require_number(const json& j, const std::string& loc) {
  if (!j.is_number()) schema_error(loc, "expected a number");
  return j.get<double>();
}

std::vector<double> require_number_array(const json& j, const std::string& loc) {
  if (!j.is_array()) schema_error(loc, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(require_number(j[i], loc + "/" + std::to_string(i)));
  }
  return out;
}

/// Re-throws a domain error with the scenario-file location attached,
/// preserving the machine-readable code.
template <typename F>
auto at_location(const std::string& loc, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), loc);
  }
}

ComplexMatrix shorthand_matrix(const std::string& name, Eigen::Index dim,
                               const std::string& loc) {
  if (name == "identity") return ComplexMatrix::Identity(dim, dim);
  if (name == "zero") return ComplexMatrix::Zero(dim, dim);
  if (dim != 2) {
    schema_error(loc, "shorthand \"" + name + "\" is only valid in dimension 2");
  }
  ComplexMatrix m(2, 2);
  if (name == "sigma_x") {
    m << 0, 1, 1, 0;
  } else if (name == "sigma_y") {
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  } else if (name == "sigma_z") {
    m << 1, 0, 0, -1;
  } else {
    schema_error(loc, "unknown matrix shorthand \"" + name + "\"");
  }
  return m;
}

ComplexMatrix parse_matrix(const json& j, Eigen::Index expected_dim, const std::string& loc) {
  if (j.is_string()) return shorthand_matrix(j.get<std::string>(), expected_dim, loc);
  if (!j.is_object()) schema_error(loc, "expected a matrix object or shorthand string");
  const Eigen::Index rows =
      static_cast<Eigen::Index>(require_number(require_key(j, "rows", loc), loc + "/rows"));
  const Eigen::Index cols =
      static_cast<Eigen::Index>(require_number(require_key(j, "cols", loc), loc + "/cols"));
  if (rows <= 0 || cols <= 0) schema_error(loc, "matrix dimensions must be positive");
  const std::vector<double> re = require_number_array(require_key(j, "re", loc), loc + "/re");
  std::vector<double> im;
  if (j.contains("im")) {
    im = require_number_array(j["im"], loc + "/im");
  } else {
    im.assign(re.size(), 0.0);
  }
  if (static_cast<Eigen::Index>(re.size()) != rows * cols ||
      static_cast<Eigen::Index>(im.size()) != rows * cols) {
    schema_error(loc, "entry count does not match rows*cols");
  }
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const size_t i = static_cast<size_t>(r * cols + c);  // row-major payload
      m(r, c) = Complex(re[i], im[i]);
    }
  }
  if (!all_finite(m)) schema_error(loc, "matrix has non-finite entries");
  return m;
}

ComplexVector parse_ket_vector(const json& j, const std::string& loc) {
  if (!j.is_object()) schema_error(loc, "expected an object with re/im arrays");
  const std::vector<double> re = require_number_array(require_key(j, "re", loc), loc + "/re");
  std::vector<double> im;
  if (j.contains("im")) {
    im = require_number_array(j["im"], loc + "/im");
  } else {
    im.assign(re.size(), 0.0);
  }
  if (re.size() != im.size()) schema_error(loc, "re and im lengths differ");
  ComplexVector v(static_cast<Eigen::Index>(re.size()));
  for (size_t i = 0; i < re.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = Complex(re[i], im[i]);
  }
  return v;
}

CostSpec parse_cost(const json& j, Eigen::Index dim, const Tolerances& tol,
                    const std::string& loc) {
  if (!j.is_object()) schema_error(loc, "expected a cost object");
  ComplexMatrix s0 = j.contains("s0") ? parse_matrix(j["s0"], dim, loc + "/s0")
                                      : ComplexMatrix::Zero(dim, dim);
  std::vector<HermitianOperator> linear;
  if (j.contains("linear")) {
    const json& arr = j["linear"];
    if (!arr.is_array()) schema_error(loc + "/linear", "expected an array of matrices");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string l = loc + "/linear/" + std::to_string(i);
      linear.push_back(at_location(l, [&] {
        return HermitianOperator(parse_matrix(arr[i], dim, l), tol);
      }));
    }
  }
  std::vector<double> quad;
  if (j.contains("quad_penalty")) {
    quad = require_number_array(j["quad_penalty"], loc + "/quad_penalty");
  }
  HermitianOperator s0_op = at_location(loc + "/s0", [&] {
    return HermitianOperator(std::move(s0), tol);
  });
  return CostSpec{std::move(s0_op), std::move(linear), std::move(quad)};
}

Tolerances parse_tolerances(const json& j, const std::string& loc) {
  Tolerances tol;
  if (!j.is_object()) schema_error(loc, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const double x = require_number(value, loc + "/" + key);
    if (key == "hermiticity") {
      tol.hermiticity = x;
    } else if (key == "norm") {
      tol.norm = x;
    } else if (key == "idempotency") {
      tol.idempotency = x;
    } else if (key == "psd") {
      tol.psd = x;
    } else if (key == "unitarity") {
      tol.unitarity = x;
    } else if (key == "numeric") {
      tol.numeric = x;
    } else if (key == "normalization") {
      tol.normalization = x;
    } else if (key == "zero_probability_floor") {
      tol.zero_probability_floor = x;
    } else {
      schema_error(loc + "/" + key, "unknown tolerance");
    }
  }
  return tol;
}

json matrix_to_json(const ComplexMatrix& m) {
  json out;
  out["rows"] = m.rows();
  out["cols"] = m.cols();
  json re = json::array();
  json im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  }
  out["re"] = std::move(re);
  out["im"] = std::move(im);
  return out;
}

json ket_to_json(const ComplexVector& v) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re.push_back(v[i].real());
    im.push_back(v[i].imag());
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

}  // namespace

std::string instrument_to_json(const Instrument& ins) {
  json out = json::array();
  for (size_t i = 0; i < ins.size(); ++i) {
    json entry;
    const auto& parts = ins.outcome(i).parts;
    if (parts.size() == 1) {
      entry["outcome"] = parts.front();
    } else {
      entry["outcome"] = parts;
    }
    entry["weight"] = ins.weight(i);
    entry["kraus"] = matrix_to_json(ins.kraus(i));
    out.push_back(std::move(entry));
  }
  return out.dump(2) + "\n";
}

Instrument parse_instrument_string(const std::string& text, const Tolerances& tol) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_array() || root.empty()) {
    schema_error("", "instrument must be a nonempty JSON array");
  }
  std::vector<Outcome> outcomes;
  std::vector<ComplexMatrix> kraus;
  std::vector<double> weights;
  for (size_t i = 0; i < root.size(); ++i) {
    const std::string loc = std::to_string(i);
    const json& entry = root[i];
    if (!entry.is_object()) schema_error(loc, "expected an instrument entry object");
    const json& joutcome = require_key(entry, "outcome", loc);
    if (joutcome.is_number_integer()) {
      outcomes.emplace_back(joutcome.get<int>());
    } else if (joutcome.is_array()) {
      std::vector<int> parts;
      for (const auto& p : joutcome) parts.push_back(p.get<int>());
      outcomes.emplace_back(std::move(parts));
    } else {
      schema_error(loc + "/outcome", "expected an integer or array of integers");
    }
    weights.push_back(entry.contains("weight")
                          ? require_number(entry["weight"], loc + "/weight")
                          : 1.0);
    kraus.push_back(parse_matrix(require_key(entry, "kraus", loc), 2, loc + "/kraus"));
  }
  return at_location("", [&] {
    return Instrument(std::move(outcomes), std::move(kraus), std::move(weights), tol);
  });
}

Scenario parse_scenario_string(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) schema_error("", "scenario must be a JSON object");

  const Eigen::Index dim =
      static_cast<Eigen::Index>(require_number(require_key(root, "dim", ""), "dim"));
  if (dim <= 0) schema_error("dim", "dimension must be positive");

  Tolerances tol;
  if (root.contains("tolerances")) tol = parse_tolerances(root["tolerances"], "tolerances");

  double hbar = 1.0;
  if (root.contains("hbar")) {
    hbar = require_number(root["hbar"], "hbar");
    if (!(hbar > 0.0)) schema_error("hbar", "hbar must be positive");
  }

  // Hamiltonian; hbar is folded in here so that exp(-i H t) needs no unit.
  const json& jham = require_key(root, "hamiltonian", "");
  ComplexMatrix h0 = parse_matrix(require_key(jham, "h0", "hamiltonian"), dim, "hamiltonian/h0");
  h0 /= hbar;
  std::vector<HermitianOperator> controls;
  if (jham.contains("controls")) {
    const json& arr = jham["controls"];
    if (!arr.is_array()) schema_error("hamiltonian/controls", "expected an array of matrices");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string loc = "hamiltonian/controls/" + std::to_string(i);
      ComplexMatrix h = parse_matrix(arr[i], dim, loc);
      h /= hbar;
      controls.push_back(at_location(loc, [&] { return HermitianOperator(std::move(h), tol); }));
    }
  }
  ControlledHamiltonian hamiltonian(
      at_location("hamiltonian/h0", [&] { return HermitianOperator(std::move(h0), tol); }),
      std::move(controls));

  // Stage-independent cost (may be overridden per stage below).
  const json* jcost_default = root.contains("cost") ? &root["cost"] : nullptr;

  std::vector<StageSpec> stages;
  std::vector<CostSpec> costs;
  if (root.contains("stages")) {
    const json& arr = root["stages"];
    if (!arr.is_array()) schema_error("stages", "expected an array of stages");
    for (size_t k = 0; k < arr.size(); ++k) {
      const json& jstage = arr[k];
      const std::string loc = "stages/" + std::to_string(k);
      if (!jstage.is_object()) schema_error(loc, "expected a stage object");
      StageSpec stage;
      stage.duration = require_number(require_key(jstage, "duration", loc), loc + "/duration");
      if (jstage.contains("substeps")) {
        stage.substeps =
            static_cast<int>(require_number(jstage["substeps"], loc + "/substeps"));
      }
      const json& jproj = require_key(jstage, "projectors", loc);
      if (!jproj.is_array() || jproj.empty()) {
        schema_error(loc + "/projectors", "expected a nonempty array");
      }
      for (size_t i = 0; i < jproj.size(); ++i) {
        const std::string ploc = loc + "/projectors/" + std::to_string(i);
        int label = static_cast<int>(i);
        const json* jmat = &jproj[i];
        if (jproj[i].is_object() && jproj[i].contains("matrix")) {
          if (jproj[i].contains("label")) {
            label = static_cast<int>(require_number(jproj[i]["label"], ploc + "/label"));
          }
          jmat = &jproj[i]["matrix"];
        }
        ComplexMatrix m = parse_matrix(*jmat, dim, ploc);
        stage.measurement.push_back(
            at_location(ploc, [&] { return Projector(std::move(m), label, tol); }));
      }
      const json& jgrid = require_key(jstage, "control_grid", loc);
      if (!jgrid.is_array() || jgrid.empty()) {
        schema_error(loc + "/control_grid", "expected a nonempty array of control vectors");
      }
      for (size_t i = 0; i < jgrid.size(); ++i) {
        const std::vector<double> entries =
            require_number_array(jgrid[i], loc + "/control_grid/" + std::to_string(i));
        ControlVector u(static_cast<Eigen::Index>(entries.size()));
        for (size_t t = 0; t < entries.size(); ++t) u[static_cast<Eigen::Index>(t)] = entries[t];
        stage.control_grid.push_back(std::move(u));
      }
      const json* jc = jstage.contains("cost") ? &jstage["cost"] : jcost_default;
      if (jc == nullptr) {
        schema_error(loc + "/cost", "no cost given for this stage and no scenario-level cost");
      }
      costs.push_back(parse_cost(*jc, dim,
                                 tol, jstage.contains("cost") ? loc + "/cost" : "cost"));
      stages.push_back(std::move(stage));
    }
  }

  ComplexMatrix terminal = parse_matrix(require_key(root, "terminal", ""), dim, "terminal");
  HermitianOperator terminal_op =
      at_location("terminal", [&] { return HermitianOperator(std::move(terminal), tol); });

  const json& jinit = require_key(root, "initial", "");
  if (!jinit.is_object()) schema_error("initial", "expected {\"ket\": ...} or {\"density\": ...}");
  std::variant<Ket, DensityOperator> initial =
      [&]() -> std::variant<Ket, DensityOperator> {
    if (jinit.contains("ket")) {
      ComplexVector v = parse_ket_vector(jinit["ket"], "initial/ket");
      return at_location("initial/ket", [&] { return Ket(std::move(v), tol); });
    }
    if (jinit.contains("density")) {
      ComplexMatrix m = parse_matrix(jinit["density"], dim, "initial/density");
      return at_location("initial/density", [&] { return DensityOperator(std::move(m), tol); });
    }
    schema_error("initial", "expected a \"ket\" or \"density\" member");
  }();

  Scenario scenario{dim,
                    std::move(hamiltonian),
                    std::move(stages),
                    std::move(costs),
                    std::move(terminal_op),
                    std::move(initial),
                    tol};
  validate_scenario_invariants(scenario);
  return scenario;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_string(buffer.str());
}

std::string canonical_scenario_json(const Scenario& s) {
  json root;
  root["dim"] = s.dim;
  json jham;
  jham["h0"] = matrix_to_json(s.hamiltonian.h0().matrix());
  json jcontrols = json::array();
  for (const HermitianOperator& h : s.hamiltonian.controls()) {
    jcontrols.push_back(matrix_to_json(h.matrix()));
  }
  jham["controls"] = std::move(jcontrols);
  root["hamiltonian"] = std::move(jham);

  json jstages = json::array();
  for (size_t k = 0; k < s.stages.size(); ++k) {
    const StageSpec& stage = s.stages[k];
    json jstage;
    jstage["duration"] = stage.duration;
    json jproj = json::array();
    for (const Projector& e : stage.measurement) {
      jproj.push_back(json{{"label", e.label()}, {"matrix", matrix_to_json(e.matrix())}});
    }
    jstage["projectors"] = std::move(jproj);
    json jgrid = json::array();
    for (const ControlVector& u : stage.control_grid) {
      json ju = json::array();
      for (Eigen::Index i = 0; i < u.size(); ++i) ju.push_back(u[i]);
      jgrid.push_back(std::move(ju));
    }
    jstage["control_grid"] = std::move(jgrid);
    jstage["substeps"] = stage.substeps;
    const CostSpec& cost = s.costs[k];
    json jc;
    jc["s0"] = matrix_to_json(cost.s0.matrix());
    json jlin = json::array();
    for (const HermitianOperator& h : cost.linear) jlin.push_back(matrix_to_json(h.matrix()));
    jc["linear"] = std::move(jlin);
    jc["quad_penalty"] = cost.quad_penalty;
    jstage["cost"] = std::move(jc);
    jstages.push_back(std::move(jstage));
  }
  root["stages"] = std::move(jstages);
  root["terminal"] = matrix_to_json(s.terminal.matrix());

  if (s.initial_is_ket()) {
    root["initial"] = json{{"ket", ket_to_json(std::get<Ket>(s.initial).amplitudes())}};
  } else {
    root["initial"] =
        json{{"density", matrix_to_json(std::get<DensityOperator>(s.initial).matrix())}};
  }

  root["tolerances"] = json{{"hermiticity", s.tol.hermiticity},
                            {"norm", s.tol.norm},
                            {"idempotency", s.tol.idempotency},
                            {"psd", s.tol.psd},
                            {"unitarity", s.tol.unitarity},
                            {"numeric", s.tol.numeric},
                            {"normalization", s.tol.normalization},
                            {"zero_probability_floor", s.tol.zero_probability_floor}};
  return root.dump(2) + "\n";
}

}  // namespace qfb
