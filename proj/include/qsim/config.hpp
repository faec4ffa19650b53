#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qsim/analysis.hpp"
#include "qsim/montecarlo.hpp"
#include "qsim/sweep.hpp"
#include "qsim/topology.hpp"

namespace qsim {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnalysisConfig {
  double tau_op = 1e-11;            // s
  int n_qubits_for_fidelity = 0;    // 0 -> array.n_qubits
  Aggregation aggregation = Aggregation::mean;
  double band_boundary_hz = 0;      // 0 -> midpoint of nominal f_q/f_r ranges

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

/// One experiment document: qubit/drive/array/sweep/variation/analysis
/// sections, JSON on disk. Unknown keys are rejected; defaults are applied
/// per module and echoed back by effective_json.
struct ExperimentConfig {
  QubitUnitParams qubit;
  DriveSpec drive;
  ArrayConfig array;
  SweepPlan sweep;
  VariationConfig variation;
  AnalysisConfig analysis;

  double band_boundary() const;
  int fidelity_n() const;
};

ExperimentConfig load_config(const json& doc);
ExperimentConfig load_config_file(const std::string& path);
json effective_json(const ExperimentConfig& cfg);

const char* to_string(Arrangement a);
const char* to_string(Aggregation a);

/// AnalysisReport document for one run.
json analysis_report_json(int run_id, const std::vector<Peak>& peaks,
                          const AnalysisConfig& analysis, int n_qubits,
                          const RunInfidelity& infidelity);

json array_params_json(const ArrayParams& params);

}  // namespace qsim
