#include "qsim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace qsim {

namespace {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double apply_target(const VariationConfig& cfg, double value, int sample_id,
                    const std::string& path, PerturbStats* stats) {
  return perturb_value(value, cfg.delta, cfg.truncation, cfg.seed, sample_id, path, stats);
}

bool targeted(const std::vector<std::string>& targets, std::string_view name) {
  return std::find(targets.begin(), targets.end(), name) != targets.end();
}

}  // namespace

const std::vector<std::string>& default_variation_targets() {
  static const std::vector<std::string> kTargets = {
      "f_q", "f_r", "t1_q", "c_q", "c_g", "c_c", "c_r",
  };
  return kTargets;
}

NormalStream::NormalStream(uint64_t seed, uint64_t sample_id, std::string_view path) {
  uint64_t h = fnv1a64(path);
  state_ = seed;
  state_ ^= splitmix64(h);
  uint64_t s = sample_id;
  state_ ^= splitmix64(s) * 0x9e3779b97f4a7c15ULL;
  splitmix64(state_);  // decorrelate nearby keys
}

double NormalStream::next() {
  // Box-Muller on two 53-bit uniforms; u1 kept away from zero.
  uint64_t a = splitmix64(state_);
  uint64_t b = splitmix64(state_);
  double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double perturb_value(double x0, double delta, double truncation, uint64_t seed,
                     int sample_id, std::string_view path, PerturbStats* stats) {
  if (delta == 0.0 || x0 == 0.0) return x0;
  NormalStream stream(seed, static_cast<uint64_t>(sample_id), path);
  for (int attempt = 0; attempt < 256; ++attempt) {
    double z = std::clamp(stream.next(), -truncation, truncation);
    double x = x0 * (1.0 + z * delta);
    if (x > 0.0) return x;
    if (stats) stats->resamples++;
  }
  throw std::runtime_error("perturbation failed to produce a positive value for '" +
                           std::string(path) + "'");
}

ArrayParams perturb(const ArrayParams& nominal, const VariationConfig& cfg, int sample_id,
                    PerturbStats* stats) {
  if (cfg.delta < 0) throw std::invalid_argument("delta must be nonnegative");
  if (cfg.n_runs < 1) throw std::invalid_argument("n_runs must be at least 1");
  const std::vector<std::string>& targets =
      cfg.targets.empty() ? default_variation_targets() : cfg.targets;

  ArrayParams out = nominal;
  for (size_t i = 0; i < out.units.size(); ++i) {
    QubitUnitParams& u = out.units[i];
    std::string prefix = "unit[" + std::to_string(i) + "].";
    if (targeted(targets, "f_q")) u.f_q = apply_target(cfg, u.f_q, sample_id, prefix + "f_q", stats);
    if (targeted(targets, "f_r")) u.f_r = apply_target(cfg, u.f_r, sample_id, prefix + "f_r", stats);
    if (targeted(targets, "t1_q")) u.t1_q = apply_target(cfg, u.t1_q, sample_id, prefix + "t1_q", stats);
    if (targeted(targets, "c_q")) u.c_q = apply_target(cfg, u.c_q, sample_id, prefix + "c_q", stats);
    if (targeted(targets, "c_r")) u.c_r = apply_target(cfg, u.c_r, sample_id, prefix + "c_r", stats);
    if (targeted(targets, "c_g")) u.c_g = apply_target(cfg, u.c_g, sample_id, prefix + "c_g", stats);
    if (targeted(targets, "c_c")) u.c_c = apply_target(cfg, u.c_c, sample_id, prefix + "c_c", stats);
  }
  if (targeted(targets, "c_qq")) {
    for (size_t k = 0; k < out.couplings.size(); ++k) {
      out.couplings[k] = apply_target(cfg, out.couplings[k], sample_id,
                                      "coupling[" + std::to_string(k) + "]", stats);
    }
  }
  return out;
}

Ensemble run_ensemble(const ArrayConfig& array, const QubitUnitParams& base,
                      const DriveSpec& drive, const VariationConfig& variation,
                      const SweepPlan& plan, int workers, const StampOptions& options) {
  check_plan(plan);
  ArrayParams nominal = nominal_array_params(array, base);

  Ensemble ens;
  ens.config = variation;
  ens.base_digest = netlist_digest(build_array(array, nominal, drive));
  ens.runs.resize(variation.n_runs);

  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int id = next.fetch_add(1);
      if (id >= variation.n_runs) break;
      RunRecord& rec = ens.runs[id];
      rec.sample_id = id;
      try {
        rec.params = perturb(nominal, variation, id);
        Netlist netlist = build_array(array, rec.params, drive);
        rec.spectrum = run_sweep(netlist, plan, 1, options);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
  };
  int w = std::clamp(workers, 1, 64);
  w = std::min(w, variation.n_runs);
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return ens;
}

}  // namespace qsim
