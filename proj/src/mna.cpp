#include "qsim/mna.hpp"

#include <algorithm>
#include <cmath>

namespace qsim {

namespace {

using Triplet = Eigen::Triplet<cplx>;

cplx source_phasor(const Element& e) {
  return std::polar(e.value, e.phase_rad());
}

}  // namespace

AcModel::AcModel(const Netlist& netlist, const StampOptions& options)
    : options_(options), node_count_(netlist.node_count()) {
  auto diags = validate(netlist);
  if (!diags.empty()) {
    throw std::invalid_argument("netlist invalid: " + diags.front());
  }

  // Incidence counts locate each voltage source's private terminal.
  std::vector<int> incidence(node_count_, 0);
  std::vector<std::vector<int>> touching(node_count_);
  const auto& elems = netlist.elements();
  for (size_t k = 0; k < elems.size(); ++k) {
    for (int t = 0; t < elems[k].terminal_count(); ++t) {
      incidence[elems[k].nodes[t]]++;
      touching[elems[k].nodes[t]].push_back(static_cast<int>(k));
    }
  }

  struct NortonPlan {
    int source;       // element index of the V source
    int series;       // element index of the series R/L/C
    int eliminated;   // private node
    int kept;         // other source terminal
    int far;          // series element's far node
    double sign;      // +1 when the eliminated node is the source's + terminal
  };
  std::vector<NortonPlan> plans;
  std::vector<char> consumed(elems.size(), 0);
  std::vector<char> eliminated(node_count_, 0);
  for (size_t k = 0; k < elems.size(); ++k) {
    const Element& e = elems[k];
    if (e.kind != ElementKind::ac_voltage_source) continue;
    NortonPlan plan{static_cast<int>(k), -1, -1, -1, -1, 0.0};
    for (int t = 0; t < 2 && plan.series < 0; ++t) {
      int cand = e.nodes[t];
      if (cand == 0 || incidence[cand] != 2) continue;
      int other_elem = touching[cand][0] == static_cast<int>(k) ? touching[cand][1]
                                                                : touching[cand][0];
      const Element& x = elems[other_elem];
      if (x.kind != ElementKind::resistor && x.kind != ElementKind::capacitor &&
          x.kind != ElementKind::inductor) {
        continue;
      }
      if (consumed[other_elem]) continue;
      int far = x.nodes[0] == cand ? x.nodes[1] : x.nodes[0];
      if (far == e.nodes[1 - t]) continue;  // source parallel to X, not a series chain
      plan.series = other_elem;
      plan.eliminated = cand;
      plan.kept = e.nodes[1 - t];
      plan.far = far;
      plan.sign = (t == 0) ? 1.0 : -1.0;
    }
    if (plan.series < 0) {
      throw std::invalid_argument("voltage source '" + e.label +
                                  "' needs a dedicated series element for the Norton transform");
    }
    consumed[plan.source] = 1;
    consumed[plan.series] = 1;
    eliminated[plan.eliminated] = 1;
    plans.push_back(plan);
  }

  sys_index_.assign(node_count_, -1);
  int next = 0;
  for (int n = 1; n < node_count_; ++n) {
    sys_index_[n] = eliminated[n] ? -2 : next++;
  }
  unknowns_ = next;

  // Pattern: every (row, col) slot any stamp can touch.
  std::vector<Triplet> trips;
  trips.reserve(elems.size() * 4 + plans.size() * 4);
  auto pair_slots = [&](int a, int b) {
    int ia = a == 0 ? -1 : sys_index_[a];
    int ib = b == 0 ? -1 : sys_index_[b];
    if (ia >= 0) trips.emplace_back(ia, ia, cplx(0, 0));
    if (ib >= 0) trips.emplace_back(ib, ib, cplx(0, 0));
    if (ia >= 0 && ib >= 0) {
      trips.emplace_back(ia, ib, cplx(0, 0));
      trips.emplace_back(ib, ia, cplx(0, 0));
    }
  };
  for (size_t k = 0; k < elems.size(); ++k) {
    if (consumed[k]) continue;
    const Element& e = elems[k];
    switch (e.kind) {
      case ElementKind::resistor:
      case ElementKind::capacitor:
      case ElementKind::inductor:
        pair_slots(e.nodes[0], e.nodes[1]);
        break;
      case ElementKind::lossless_line:
        for (int i = 0; i < 4; ++i) {
          for (int j = 0; j < 4; ++j) {
            int ia = sys_index_[e.nodes[i]];
            int ib = sys_index_[e.nodes[j]];
            if (ia >= 0 && ib >= 0) trips.emplace_back(ia, ib, cplx(0, 0));
          }
        }
        break;
      case ElementKind::ac_current_source:
        break;  // right-hand side only
      case ElementKind::ac_voltage_source:
        break;  // handled via plans
    }
  }
  for (const auto& plan : plans) pair_slots(plan.kept, plan.far);

  pattern_.resize(unknowns_, unknowns_);
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();
  base_values_.assign(static_cast<size_t>(pattern_.nonZeros()), cplx(0, 0));

  // Second pass: record slot-mapped stamps; constant resistive admittances go
  // straight into the base value array.
  auto add_base = [&](int a, int b, cplx y) {
    int slots[4];
    map_two_terminal(a, b, slots);
    if (slots[0] >= 0) base_values_[slots[0]] += y;
    if (slots[1] >= 0) base_values_[slots[1]] += y;
    if (slots[2] >= 0) base_values_[slots[2]] -= y;
    if (slots[3] >= 0) base_values_[slots[3]] -= y;
  };
  for (size_t k = 0; k < elems.size(); ++k) {
    if (consumed[k]) continue;
    const Element& e = elems[k];
    switch (e.kind) {
      case ElementKind::resistor:
        add_base(e.nodes[0], e.nodes[1], cplx(1.0 / e.value, 0.0));
        break;
      case ElementKind::capacitor: {
        CapStamp s{};
        map_two_terminal(e.nodes[0], e.nodes[1], s.slots);
        s.c = e.value;
        caps_.push_back(s);
        break;
      }
      case ElementKind::inductor: {
        IndStamp s{};
        map_two_terminal(e.nodes[0], e.nodes[1], s.slots);
        s.l = e.value;
        inductors_.push_back(s);
        break;
      }
      case ElementKind::lossless_line: {
        LineStamp s{};
        int p[4] = {sys_index_[e.nodes[0]], sys_index_[e.nodes[1]],
                    sys_index_[e.nodes[2]], sys_index_[e.nodes[3]]};
        auto quad = [&](int out[8], int a, int b, int c, int d) {
          // +y at (a,c),(b,d); -y at (a,d),(b,c)
          out[0] = (p[a] >= 0 && p[c] >= 0) ? slot_of(p[a], p[c]) : -1;
          out[1] = (p[b] >= 0 && p[d] >= 0) ? slot_of(p[b], p[d]) : -1;
          out[2] = (p[a] >= 0 && p[d] >= 0) ? slot_of(p[a], p[d]) : -1;
          out[3] = (p[b] >= 0 && p[c] >= 0) ? slot_of(p[b], p[c]) : -1;
        };
        // self admittance of port1 (nodes 0,1) and port2 (nodes 2,3)
        quad(s.self_slots, 0, 1, 0, 1);
        quad(s.self_slots + 4, 2, 3, 2, 3);
        // transfer admittance port1<->port2, symmetric
        quad(s.cross_slots, 0, 1, 2, 3);
        quad(s.cross_slots + 4, 2, 3, 0, 1);
        s.z0 = e.z0;
        s.tau = e.delay;
        lines_.push_back(s);
        break;
      }
      case ElementKind::ac_current_source: {
        CurrentStamp s{};
        s.row_plus = sys_index_[e.nodes[0]];
        s.row_minus = sys_index_[e.nodes[1]];
        s.j = source_phasor(e);
        currents_.push_back(s);
        break;
      }
      case ElementKind::ac_voltage_source:
        break;
    }
  }
  for (const auto& plan : plans) {
    const Element& src = elems[plan.source];
    const Element& x = elems[plan.series];
    NortonStamp s{};
    map_two_terminal(plan.kept, plan.far, s.slots);
    s.rhs_plus = plan.far == 0 ? -1 : sys_index_[plan.far];
    s.rhs_minus = plan.kept == 0 ? -1 : sys_index_[plan.kept];
    s.series_kind = x.kind;
    s.series_value = x.value;
    s.v_phasor = source_phasor(src) * plan.sign;
    nortons_.push_back(s);
    backfills_.push_back(Backfill{plan.eliminated, plan.kept,
                                  source_phasor(src) * plan.sign});
  }
}

void AcModel::map_two_terminal(int a, int b, int out[4]) const {
  int ia = a == 0 ? -1 : sys_index_[a];
  int ib = b == 0 ? -1 : sys_index_[b];
  out[0] = ia >= 0 ? slot_of(ia, ia) : -1;
  out[1] = ib >= 0 ? slot_of(ib, ib) : -1;
  out[2] = (ia >= 0 && ib >= 0) ? slot_of(ia, ib) : -1;
  out[3] = (ia >= 0 && ib >= 0) ? slot_of(ib, ia) : -1;
}

int AcModel::slot_of(int row, int col) const {
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  const int* lo = inner + outer[col];
  const int* hi = inner + outer[col + 1];
  const int* it = std::lower_bound(lo, hi, row);
  return static_cast<int>(it - inner);
}

Eigen::SparseMatrix<cplx> AcModel::pattern() const { return pattern_; }

void AcModel::assemble(double omega, Eigen::SparseMatrix<cplx>& y,
                       Eigen::VectorXcd& rhs) const {
  if (!(omega > 0)) throw std::invalid_argument("omega must be positive");
  cplx* v = y.valuePtr();
  std::copy(base_values_.begin(), base_values_.end(), v);
  auto scatter = [&](const int slots[4], cplx adm) {
    if (slots[0] >= 0) v[slots[0]] += adm;
    if (slots[1] >= 0) v[slots[1]] += adm;
    if (slots[2] >= 0) v[slots[2]] -= adm;
    if (slots[3] >= 0) v[slots[3]] -= adm;
  };
  for (const auto& s : caps_) scatter(s.slots, cplx(0.0, omega * s.c));
  for (const auto& s : inductors_) scatter(s.slots, cplx(0.0, -1.0 / (omega * s.l)));
  for (const auto& s : lines_) {
    double theta = omega * s.tau;
    cplx gamma(options_.line_loss_epsilon, theta);
    if (options_.line_loss_epsilon == 0.0 &&
        std::abs(std::sin(theta)) < options_.singular_sin_floor) {
      throw SolveError(omega, "lossless line '" + std::string() +
                                  "' singular (omega*tau at a multiple of pi)");
    }
    cplx sh = std::sinh(gamma);
    cplx y11 = std::cosh(gamma) / (s.z0 * sh);
    cplx y12 = -1.0 / (s.z0 * sh);
    auto quad = [&](const int* slots, cplx adm) {
      if (slots[0] >= 0) v[slots[0]] += adm;
      if (slots[1] >= 0) v[slots[1]] += adm;
      if (slots[2] >= 0) v[slots[2]] -= adm;
      if (slots[3] >= 0) v[slots[3]] -= adm;
    };
    quad(s.self_slots, y11);
    quad(s.self_slots + 4, y11);
    quad(s.cross_slots, y12);
    quad(s.cross_slots + 4, y12);
  }

  rhs.setZero(unknowns_);
  for (const auto& s : nortons_) {
    cplx adm;
    switch (s.series_kind) {
      case ElementKind::resistor: adm = cplx(1.0 / s.series_value, 0.0); break;
      case ElementKind::capacitor: adm = cplx(0.0, omega * s.series_value); break;
      default: adm = cplx(0.0, -1.0 / (omega * s.series_value)); break;
    }
    scatter(s.slots, adm);
    cplx j = adm * s.v_phasor;
    if (s.rhs_plus >= 0) rhs[s.rhs_plus] += j;
    if (s.rhs_minus >= 0) rhs[s.rhs_minus] -= j;
  }
  for (const auto& s : currents_) {
    if (s.row_plus >= 0) rhs[s.row_plus] -= s.j;
    if (s.row_minus >= 0) rhs[s.row_minus] += s.j;
  }
}

Eigen::VectorXcd AcModel::expand(const Eigen::VectorXcd& x) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(node_count_);
  for (int n = 1; n < node_count_; ++n) {
    if (sys_index_[n] >= 0) v[n] = x[sys_index_[n]];
  }
  for (const auto& b : backfills_) v[b.node] = v[b.from_node] + b.v;
  return v;
}

AcSystem stamp(const Netlist& netlist, double omega, const StampOptions& options) {
  AcModel model(netlist, options);
  AcSystem sys;
  sys.y = model.pattern();
  sys.omega = omega;
  model.assemble(omega, sys.y, sys.i_src);
  return sys;
}

namespace {

Eigen::VectorXcd solve_checked(
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>>& lu,
    const Eigen::SparseMatrix<cplx>& y, const Eigen::VectorXcd& rhs, double omega,
    double tol) {
  if (lu.info() != Eigen::Success) {
    throw SolveError(omega, "numerically singular admittance matrix");
  }
  Eigen::VectorXcd x = lu.solve(rhs);
  double ref = rhs.norm();
  if (ref == 0.0) return Eigen::VectorXcd::Zero(rhs.size());
  Eigen::VectorXcd r = rhs - y * x;
  if (r.norm() > tol * ref) {
    x += lu.solve(r);  // one step of iterative refinement
    r = rhs - y * x;
    if (r.norm() > tol * ref) {
      throw SolveError(omega, "residual tolerance not met after refinement");
    }
  }
  return x;
}

}  // namespace

Solution solve(const AcSystem& system, const StampOptions& options) {
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(system.y);
  Eigen::VectorXcd x =
      solve_checked(lu, system.y, system.i_src, system.omega, options.residual_tolerance);
  Solution out;
  out.omega = system.omega;
  out.v = Eigen::VectorXcd::Zero(x.size() + 1);
  out.v.tail(x.size()) = x;
  return out;
}

AcSolver::AcSolver(const Netlist& netlist, const StampOptions& options)
    : AcSolver(std::make_shared<const AcModel>(netlist, options)) {}

AcSolver::AcSolver(std::shared_ptr<const AcModel> model)
    : model_(std::move(model)), y_(model_->pattern()) {}

Solution AcSolver::solve_at(double omega) {
  model_->assemble(omega, y_, rhs_);
  if (!analyzed_) {
    lu_.analyzePattern(y_);
    analyzed_ = true;
  }
  lu_.factorize(y_);
  Eigen::VectorXcd x = solve_checked(lu_, y_, rhs_, omega,
                                     model_->options().residual_tolerance);
  Solution out;
  out.omega = omega;
  out.v = model_->expand(x);
  return out;
}

}  // namespace qsim
