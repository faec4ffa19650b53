#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qsim {

/// Parse a SPICE-style value: decimal, scientific, or SI-suffixed
/// (f p n u m k meg g, case-insensitive; "m"=1e-3, "meg"=1e6). Trailing
/// unit letters after the suffix are ignored ("30fF" == 30e-15).
/// Returns nullopt on malformed input.
std::optional<double> parse_spice_value(std::string_view text);

/// Shortest decimal form that parses back to the identical double.
std::string format_value(double v);

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class ElementKind {
  resistor,
  capacitor,
  inductor,
  lossless_line,
  ac_voltage_source,
  ac_current_source,
};

char kind_letter(ElementKind kind);

struct Element {
  ElementKind kind{};
  std::string label;
  std::array<int, 4> nodes{};  // lumped elements use [0],[1]; lines use all 4
  double value = 0.0;          // ohms / farads / henries / source amplitude
  double z0 = 0.0;             // lossless_line characteristic impedance
  double delay = 0.0;          // lossless_line one-way delay, seconds
  double phase_deg = 0.0;      // sources; stored in degrees so the text round trip is exact

  int terminal_count() const { return kind == ElementKind::lossless_line ? 4 : 2; }
  bool is_source() const {
    return kind == ElementKind::ac_voltage_source || kind == ElementKind::ac_current_source;
  }
  double phase_rad() const;

  friend bool operator==(const Element&, const Element&) = default;
};

/// Element-level circuit graph with named nodes and output probes.
/// Node index 0 is always ground ("0"); indices are dense in creation order.
/// Treated as immutable once construction is finished.
class Netlist {
 public:
  Netlist();

  std::string title;

  int add_node(const std::string& name);
  int find_node(std::string_view name) const;  // -1 if absent
  const std::string& node_name(int index) const { return node_names_.at(index); }
  int node_count() const { return static_cast<int>(node_names_.size()); }

  void add_resistor(const std::string& label, const std::string& n_plus,
                    const std::string& n_minus, double ohms);
  void add_capacitor(const std::string& label, const std::string& n_plus,
                     const std::string& n_minus, double farads);
  void add_inductor(const std::string& label, const std::string& n_plus,
                    const std::string& n_minus, double henries);
  void add_lossless_line(const std::string& label, const std::string& p1_plus,
                         const std::string& p1_minus, const std::string& p2_plus,
                         const std::string& p2_minus, double z0, double delay_s);
  void add_ac_voltage_source(const std::string& label, const std::string& n_plus,
                             const std::string& n_minus, double amplitude,
                             double phase_deg = 0.0);
  void add_ac_current_source(const std::string& label, const std::string& n_plus,
                             const std::string& n_minus, double amplitude,
                             double phase_deg = 0.0);

  /// Marks an existing node as an output. Throws std::invalid_argument if absent.
  void add_probe(const std::string& node);

  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<int>& probes() const { return probes_; }
  std::vector<std::string> probe_names() const;
  int source_count() const;

  friend bool operator==(const Netlist& a, const Netlist& b);

 private:
  void add_two_terminal(ElementKind kind, const std::string& label, const std::string& n_plus,
                        const std::string& n_minus, double value, double phase_deg);
  void register_label(const std::string& label, ElementKind kind);

  std::vector<Element> elements_;
  std::vector<int> probes_;
  std::vector<std::string> node_names_;
  std::unordered_map<std::string, int> node_index_;
  std::unordered_set<std::string> labels_;
};

/// Structural checks: at least one AC source, probes valid, and every
/// non-ground node reachable from ground through element admittances
/// (current sources provide no path). Empty result == all invariants hold.
std::vector<std::string> validate(const Netlist& netlist);

Netlist parse_netlist(std::string_view text);

enum class Dialect { native, ltspice };

/// Frequency sweep card emitted with the ltspice dialect.
struct AcCard {
  double f_min = 5.5e9;
  double f_max = 9.5e9;
  int n_points = 4001;
  bool log_spacing = false;
};

std::string emit_netlist(const Netlist& netlist, Dialect dialect,
                         const std::optional<AcCard>& ac = std::nullopt);

uint64_t fnv1a64(std::string_view data);

/// Stable content hash of the canonical native emission, as 16 hex digits.
std::string netlist_digest(const Netlist& netlist);

}  // namespace qsim
