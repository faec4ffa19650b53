#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qsim/mna.hpp"
#include "qsim/netlist.hpp"

namespace qsim {

struct RefineSpec {
  bool enabled = true;
  int min_points_per_fwhm = 20;
  int max_depth = 8;

  friend bool operator==(const RefineSpec&, const RefineSpec&) = default;
};

struct SweepPlan {
  double f_min = 5.5e9;
  double f_max = 9.5e9;
  int n_coarse = 4001;
  bool log_spacing = false;
  RefineSpec refine;

  friend bool operator==(const SweepPlan&, const SweepPlan&) = default;
};

void check_plan(const SweepPlan& plan);
std::vector<double> plan_grid(const SweepPlan& plan);

/// Per-probe complex response over an ascending frequency grid.
struct Spectrum {
  std::vector<double> freqs;
  std::vector<std::string> probes;
  std::vector<std::vector<cplx>> response;  // [probe][freq index]
  std::string netlist_digest;

  size_t size() const { return freqs.size(); }
  int probe_index(std::string_view name) const;
  double magnitude(int probe, size_t i) const { return std::abs(response[probe][i]); }
};

/// Coarse pass over the plan grid, then bisection refinement around detected
/// response maxima until each half-power interval holds at least
/// min_points_per_fwhm samples (or max_depth is exhausted). Frequencies within
/// a pass are solved in parallel across `workers`; the result is independent
/// of the worker count.
Spectrum run_sweep(const Netlist& netlist, const SweepPlan& plan, int workers = 1,
                   const StampOptions& options = {});

/// Restriction of a spectrum to [f_lo, f_hi]. Throws std::invalid_argument on
/// an empty band.
Spectrum band_select(const Spectrum& spectrum, double f_lo, double f_hi);

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum);
Spectrum read_spectrum_csv(std::istream& is);

}  // namespace qsim
