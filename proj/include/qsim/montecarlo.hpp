#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qsim/sweep.hpp"
#include "qsim/topology.hpp"

namespace qsim {

struct VariationConfig {
  double delta = 0.0;           // relative standard deviation
  std::vector<std::string> targets;  // empty selects the default per-unit set
  int n_runs = 1;
  uint64_t seed = 0;
  double truncation = 4.0;      // clamp |z| at this many sigma

  friend bool operator==(const VariationConfig&, const VariationConfig&) = default;
};

/// Per-unit parameters perturbed by default: the paper's list plus both
/// coupling capacitors of the chain. c_qq is per-edge and opt-in.
const std::vector<std::string>& default_variation_targets();

struct PerturbStats {
  int resamples = 0;  // draws rejected for producing a nonpositive value
};

/// Deterministic standard-normal stream derived from (seed, sample_id,
/// parameter path); independent of worker count and call order across paths.
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint64_t sample_id, std::string_view path);
  double next();

 private:
  uint64_t state_;
};

/// X0 * (1 + z*delta) with z clamped to the truncation; nonpositive results
/// are resampled from the same stream. X0 == 0 is returned unchanged.
double perturb_value(double x0, double delta, double truncation, uint64_t seed,
                     int sample_id, std::string_view path, PerturbStats* stats = nullptr);

ArrayParams perturb(const ArrayParams& nominal, const VariationConfig& cfg, int sample_id,
                    PerturbStats* stats = nullptr);

struct RunRecord {
  int sample_id = 0;
  ArrayParams params;
  Spectrum spectrum;
  std::string error;  // nonempty when the run's rebuild or solve failed
};

struct Ensemble {
  std::vector<RunRecord> runs;
  VariationConfig config;
  std::string base_digest;  // digest of the unperturbed netlist
};

/// Per sample: perturb -> rebuild -> sweep. Runs execute in parallel across
/// workers; per-run failures are recorded, not fatal. The parameter tables are
/// a pure function of (seed, config, topology).
Ensemble run_ensemble(const ArrayConfig& array, const QubitUnitParams& base,
                      const DriveSpec& drive, const VariationConfig& variation,
                      const SweepPlan& plan, int workers = 1,
                      const StampOptions& options = {});

}  // namespace qsim
