#include "qsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace qsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPower = 0.70710678118654752;  // 1/sqrt(2)

/// Solves the model at every listed frequency, writing per-probe responses to
/// the given column indices. Deterministic under any worker interleaving.
void solve_batch(std::shared_ptr<const AcModel> model, const std::vector<int>& probe_nodes,
                 const std::vector<double>& freqs, const std::vector<size_t>& columns,
                 std::vector<std::vector<cplx>>& response, int workers) {
  workers = std::clamp(workers, 1, 64);
  workers = std::min<int>(workers, std::max<size_t>(freqs.size(), 1));
  std::atomic<size_t> next{0};
  std::mutex err_mutex;
  std::optional<std::pair<double, std::string>> first_error;

  auto work = [&]() {
    AcSolver solver(model);
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= freqs.size()) break;
      try {
        Solution sol = solver.solve_at(kTwoPi * freqs[i]);
        for (size_t p = 0; p < probe_nodes.size(); ++p) {
          cplx v = sol.v[probe_nodes[p]];
          if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw SolveError(sol.omega, "non-finite response");
          }
          response[p][columns[i]] = v;
        }
      } catch (const SolveError& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error || e.omega() < first_error->first) {
          first_error = {e.omega(), e.what()};
        }
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) {
    throw SolveError(first_error->first, first_error->second);
  }
}

struct PeakWindow {
  double lo, hi;
};

/// Half-power interval around local maximum i, linearly interpolated; nullopt
/// when a crossing is missing on either side.
std::optional<PeakWindow> half_power_window(const std::vector<double>& f,
                                            const std::vector<double>& mag, size_t i) {
  double level = mag[i] * kHalfPower;
  std::optional<double> lo, hi;
  for (size_t k = i; k > 0; --k) {
    if (mag[k - 1] < level && level <= mag[k]) {
      double t = (level - mag[k - 1]) / (mag[k] - mag[k - 1]);
      lo = f[k - 1] + t * (f[k] - f[k - 1]);
      break;
    }
  }
  for (size_t k = i; k + 1 < f.size(); ++k) {
    if (mag[k + 1] < level && level <= mag[k]) {
      double t = (mag[k] - level) / (mag[k] - mag[k + 1]);
      hi = f[k] + t * (f[k + 1] - f[k]);
      break;
    }
  }
  if (!lo || !hi) return std::nullopt;
  return PeakWindow{*lo, *hi};
}

size_t count_inside(const std::vector<double>& f, double lo, double hi) {
  auto a = std::upper_bound(f.begin(), f.end(), lo);
  auto b = std::lower_bound(f.begin(), f.end(), hi);
  return a < b ? static_cast<size_t>(b - a) : 0;
}

}  // namespace

void check_plan(const SweepPlan& plan) {
  if (!(plan.f_min > 0) || !(plan.f_max > plan.f_min)) {
    throw std::invalid_argument("sweep plan requires 0 < f_min < f_max");
  }
  if (plan.n_coarse < 2) throw std::invalid_argument("sweep plan requires n_coarse >= 2");
  if (plan.refine.min_points_per_fwhm < 2 || plan.refine.max_depth < 0) {
    throw std::invalid_argument("bad refinement spec");
  }
}

std::vector<double> plan_grid(const SweepPlan& plan) {
  check_plan(plan);
  std::vector<double> f(plan.n_coarse);
  int n = plan.n_coarse;
  if (plan.log_spacing) {
    double la = std::log(plan.f_min), lb = std::log(plan.f_max);
    for (int i = 0; i < n; ++i) {
      f[i] = std::exp(la + (lb - la) * i / (n - 1));
    }
    f.front() = plan.f_min;
    f.back() = plan.f_max;
  } else {
    for (int i = 0; i < n; ++i) {
      f[i] = plan.f_min + (plan.f_max - plan.f_min) * i / (n - 1);
    }
  }
  return f;
}

int Spectrum::probe_index(std::string_view name) const {
  for (size_t i = 0; i < probes.size(); ++i) {
    if (probes[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Spectrum run_sweep(const Netlist& netlist, const SweepPlan& plan, int workers,
                   const StampOptions& options) {
  check_plan(plan);
  auto model = std::make_shared<const AcModel>(netlist, options);
  std::vector<int> probe_nodes(netlist.probes().begin(), netlist.probes().end());

  Spectrum spec;
  spec.freqs = plan_grid(plan);
  spec.probes = netlist.probe_names();
  spec.netlist_digest = netlist_digest(netlist);
  spec.response.assign(probe_nodes.size(), std::vector<cplx>(spec.freqs.size()));

  {
    std::vector<size_t> cols(spec.freqs.size());
    for (size_t i = 0; i < cols.size(); ++i) cols[i] = i;
    solve_batch(model, probe_nodes, spec.freqs, cols, spec.response, workers);
  }
  if (!plan.refine.enabled) return spec;

  for (int depth = 0; depth < plan.refine.max_depth; ++depth) {
    // Collect refinement windows from every probe's unresolved maxima.
    std::vector<PeakWindow> windows;
    for (size_t p = 0; p < spec.response.size(); ++p) {
      std::vector<double> mag(spec.freqs.size());
      for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(spec.response[p][i]);
      for (size_t i = 1; i + 1 < mag.size(); ++i) {
        if (!(mag[i] > mag[i - 1] && mag[i] > mag[i + 1])) continue;
        auto win = half_power_window(spec.freqs, mag, i);
        if (win) {
          if (count_inside(spec.freqs, win->lo, win->hi) <
              static_cast<size_t>(plan.refine.min_points_per_fwhm)) {
            windows.push_back(*win);
          }
        } else {
          // crossings not bracketed yet; zoom around the sample neighborhood
          size_t a = i >= 2 ? i - 2 : 0;
          size_t b = std::min(i + 2, mag.size() - 1);
          windows.push_back({spec.freqs[a], spec.freqs[b]});
        }
      }
    }
    if (windows.empty()) break;

    std::set<double> inserts;
    for (const auto& w : windows) {
      size_t i0 = static_cast<size_t>(
          std::lower_bound(spec.freqs.begin(), spec.freqs.end(), w.lo) - spec.freqs.begin());
      if (i0 > 0) --i0;
      size_t i1 = static_cast<size_t>(
          std::upper_bound(spec.freqs.begin(), spec.freqs.end(), w.hi) - spec.freqs.begin());
      size_t last = std::min(i1, spec.freqs.size() - 2);
      for (size_t k = i0; k <= last; ++k) {
        double mid = 0.5 * (spec.freqs[k] + spec.freqs[k + 1]);
        if (mid > spec.freqs[k] && mid < spec.freqs[k + 1]) inserts.insert(mid);
      }
    }
    if (inserts.empty()) break;

    std::vector<double> new_freqs(inserts.begin(), inserts.end());
    size_t old_n = spec.freqs.size();
    std::vector<size_t> cols(new_freqs.size());
    for (size_t i = 0; i < new_freqs.size(); ++i) cols[i] = old_n + i;
    for (auto& r : spec.response) r.resize(old_n + new_freqs.size());
    solve_batch(model, probe_nodes, new_freqs, cols, spec.response, workers);

    // ordered merge of the new points
    std::vector<size_t> order(old_n + new_freqs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> all = spec.freqs;
    all.insert(all.end(), new_freqs.begin(), new_freqs.end());
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return all[a] < all[b]; });
    std::vector<double> merged(order.size());
    for (size_t i = 0; i < order.size(); ++i) merged[i] = all[order[i]];
    for (auto& r : spec.response) {
      std::vector<cplx> tmp(order.size());
      for (size_t i = 0; i < order.size(); ++i) tmp[i] = r[order[i]];
      r = std::move(tmp);
    }
    spec.freqs = std::move(merged);
  }
  return spec;
}

Spectrum band_select(const Spectrum& spectrum, double f_lo, double f_hi) {
  if (!(f_lo < f_hi)) throw std::invalid_argument("empty band");
  auto a = std::lower_bound(spectrum.freqs.begin(), spectrum.freqs.end(), f_lo);
  auto b = std::upper_bound(spectrum.freqs.begin(), spectrum.freqs.end(), f_hi);
  if (a >= b) throw std::invalid_argument("empty band");
  size_t ia = static_cast<size_t>(a - spectrum.freqs.begin());
  size_t ib = static_cast<size_t>(b - spectrum.freqs.begin());
  Spectrum out;
  out.freqs.assign(spectrum.freqs.begin() + ia, spectrum.freqs.begin() + ib);
  out.probes = spectrum.probes;
  out.netlist_digest = spectrum.netlist_digest;
  out.response.reserve(spectrum.response.size());
  for (const auto& r : spectrum.response) {
    out.response.emplace_back(r.begin() + ia, r.begin() + ib);
  }
  return out;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spectrum) {
  os << "# netlist_digest=" << spectrum.netlist_digest << '\n';
  os << "freq_hz";
  for (const auto& p : spectrum.probes) {
    os << ",re_" << p << ",im_" << p << ",mag_" << p;
  }
  os << '\n';
  for (size_t i = 0; i < spectrum.freqs.size(); ++i) {
    os << format_value(spectrum.freqs[i]);
    for (size_t p = 0; p < spectrum.response.size(); ++p) {
      const cplx& v = spectrum.response[p][i];
      os << ',' << format_value(v.real()) << ',' << format_value(v.imag()) << ','
         << format_value(std::abs(v));
    }
    os << '\n';
  }
}

Spectrum read_spectrum_csv(std::istream& is) {
  Spectrum spec;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find("netlist_digest=");
      if (eq != std::string::npos) spec.netlist_digest = line.substr(eq + 15);
      continue;
    }
    break;  // header row reached
  }
  if (line.empty()) throw std::runtime_error("spectrum CSV: missing header");
  {
    std::stringstream ss(line);
    std::string col;
    bool first = true;
    while (std::getline(ss, col, ',')) {
      if (first) {
        if (col != "freq_hz") throw std::runtime_error("spectrum CSV: expected freq_hz column");
        first = false;
      } else if (col.rfind("re_", 0) == 0) {
        spec.probes.push_back(col.substr(3));
      }
    }
  }
  spec.response.assign(spec.probes.size(), {});
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      auto v = parse_spice_value(cell);
      if (!v) throw std::runtime_error("spectrum CSV: bad number '" + cell + "'");
      cells.push_back(*v);
    }
    if (cells.size() != 1 + 3 * spec.probes.size()) {
      throw std::runtime_error("spectrum CSV: wrong column count");
    }
    spec.freqs.push_back(cells[0]);
    for (size_t p = 0; p < spec.probes.size(); ++p) {
      spec.response[p].emplace_back(cells[1 + 3 * p], cells[2 + 3 * p]);
    }
  }
  return spec;
}

}  // namespace qsim
