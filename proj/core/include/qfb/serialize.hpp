#pragma once

#include <string>

#include "qfb/control.hpp"
#include "qfb/filter.hpp"
#include "qfb/sim.hpp"

namespace qfb {

/// Scenario ingestion. Parsing applies defaults (hbar = 1, substeps = 16,
/// default tolerances), expands the named shorthands ("sigma_x", "sigma_y",
/// "sigma_z", "identity", "zero"), folds hbar into the Hamiltonian, and runs
/// the full invariant sweep. Schema errors carry a JSON-pointer-style
/// location; invariant errors name the failed check and its residual.
Scenario parse_scenario_string(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

/// Deterministic, shorthand-free serialization; parsing it reproduces the
/// same scenario byte-for-byte under another canonical pass.
std::string canonical_scenario_json(const Scenario& s);

/// Instruments travel as JSON arrays of {"outcome", "weight", "kraus"}
/// entries, using the shared matrix format. Single-part outcome labels are
/// plain integers; composite labels are arrays.
std::string instrument_to_json(const Instrument& ins);
Instrument parse_instrument_string(const std::string& text, const Tolerances& tol = {});

Strategy parse_strategy_string(const std::string& text);
/// Accepts either a bare strategy object or a full solve report (the
/// "strategy" member is used), so solver output can feed the simulator.
Strategy parse_strategy_file(const std::string& path);

std::string strategy_to_json(const Strategy& strategy);

std::string solve_report_to_json(const SolveReport& report);
/// Per-stage value tables, form-B reports only: stage,outcome,value rows.
std::string solve_report_tables_to_csv(const SolveReport& report);

std::string sim_result_to_json(const SimResult& result);
std::string sim_result_to_csv(const SimResult& result);
/// One row per trajectory: record and accumulated cost.
std::string trajectories_to_csv(const SimResult& result);

std::string filtered_trajectory_to_json(const FilteredTrajectory& t,
                                        const MeasurementRecord& record);
std::string filtered_trajectory_to_csv(const FilteredTrajectory& t,
                                       const MeasurementRecord& record);

std::string posterior_tree_to_json(const PosteriorTree& tree);
std::string posterior_tree_to_csv(const PosteriorTree& tree);

std::string kernels_to_json(const Scenario& s, const std::vector<TransitionKernel>& kernels);
std::string kernels_to_csv(const std::vector<TransitionKernel>& kernels);

/// Residual report over every load-time and instrument-level check of an
/// already-parsed scenario; "pass" is true iff every row passes.
std::string scenario_validation_json(const Scenario& s);

}  // namespace qfb
