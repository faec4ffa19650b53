#include "qsim/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace qsim {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool all_alpha(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isalpha(c) != 0; });
}

}  // namespace

std::optional<double> parse_spice_value(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double mantissa = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), mantissa);
  if (ec != std::errc() || ptr == text.data()) return std::nullopt;
  std::string_view rest(ptr, static_cast<size_t>(text.data() + text.size() - ptr));
  if (rest.empty()) return mantissa;
  if (!all_alpha(rest)) return std::nullopt;
  std::string low = to_lower(rest);
  double factor = 1.0;
  size_t used = 0;
  if (low.rfind("meg", 0) == 0) {
    factor = 1e6;
    used = 3;
  } else {
    switch (low[0]) {
      case 'f': factor = 1e-15; used = 1; break;
      case 'p': factor = 1e-12; used = 1; break;
      case 'n': factor = 1e-9; used = 1; break;
      case 'u': factor = 1e-6; used = 1; break;
      case 'm': factor = 1e-3; used = 1; break;
      case 'k': factor = 1e3; used = 1; break;
      case 'g': factor = 1e9; used = 1; break;
      default: used = 0; break;  // bare unit letters, e.g. "50Ohm"
    }
  }
  (void)used;  // anything after the suffix is a unit annotation, ignored
  return mantissa * factor;
}

std::string format_value(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

char kind_letter(ElementKind kind) {
  switch (kind) {
    case ElementKind::resistor: return 'R';
    case ElementKind::capacitor: return 'C';
    case ElementKind::inductor: return 'L';
    case ElementKind::lossless_line: return 'T';
    case ElementKind::ac_voltage_source: return 'V';
    case ElementKind::ac_current_source: return 'I';
  }
  return '?';
}

double Element::phase_rad() const { return phase_deg * std::numbers::pi / 180.0; }

Netlist::Netlist() {
  node_names_.push_back("0");
  node_index_.emplace("0", 0);
}

int Netlist::add_node(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t") != std::string::npos) {
    throw std::invalid_argument("bad node name: '" + name + "'");
  }
  auto [it, inserted] = node_index_.try_emplace(name, static_cast<int>(node_names_.size()));
  if (inserted) node_names_.push_back(name);
  return it->second;
}

int Netlist::find_node(std::string_view name) const {
  auto it = node_index_.find(std::string(name));
  return it == node_index_.end() ? -1 : it->second;
}

void Netlist::register_label(const std::string& label, ElementKind kind) {
  if (label.size() < 2) {
    throw std::invalid_argument("element label too short: '" + label + "'");
  }
  if (std::toupper(static_cast<unsigned char>(label[0])) != kind_letter(kind)) {
    throw std::invalid_argument("label '" + label + "' does not start with '" +
                                std::string(1, kind_letter(kind)) + "'");
  }
  if (!labels_.insert(label).second) {
    throw std::invalid_argument("duplicate label: '" + label + "'");
  }
}

void Netlist::add_two_terminal(ElementKind kind, const std::string& label,
                               const std::string& n_plus, const std::string& n_minus,
                               double value, double phase_deg) {
  register_label(label, kind);
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("nonpositive value for '" + label + "'");
  }
  Element e;
  e.kind = kind;
  e.label = label;
  e.nodes = {add_node(n_plus), add_node(n_minus), 0, 0};
  e.value = value;
  e.phase_deg = phase_deg;
  elements_.push_back(std::move(e));
}

void Netlist::add_resistor(const std::string& label, const std::string& np,
                           const std::string& nm, double ohms) {
  add_two_terminal(ElementKind::resistor, label, np, nm, ohms, 0.0);
}

void Netlist::add_capacitor(const std::string& label, const std::string& np,
                            const std::string& nm, double farads) {
  add_two_terminal(ElementKind::capacitor, label, np, nm, farads, 0.0);
}

void Netlist::add_inductor(const std::string& label, const std::string& np,
                           const std::string& nm, double henries) {
  add_two_terminal(ElementKind::inductor, label, np, nm, henries, 0.0);
}

void Netlist::add_ac_voltage_source(const std::string& label, const std::string& np,
                                    const std::string& nm, double amplitude,
                                    double phase_deg) {
  add_two_terminal(ElementKind::ac_voltage_source, label, np, nm, amplitude, phase_deg);
}

void Netlist::add_ac_current_source(const std::string& label, const std::string& np,
                                    const std::string& nm, double amplitude,
                                    double phase_deg) {
  add_two_terminal(ElementKind::ac_current_source, label, np, nm, amplitude, phase_deg);
}

void Netlist::add_lossless_line(const std::string& label, const std::string& p1p,
                                const std::string& p1m, const std::string& p2p,
                                const std::string& p2m, double z0, double delay_s) {
  register_label(label, ElementKind::lossless_line);
  if (!(z0 > 0.0) || !std::isfinite(z0)) {
    throw std::invalid_argument("nonpositive Z0 for '" + label + "'");
  }
  if (!(delay_s > 0.0) || !std::isfinite(delay_s)) {
    throw std::invalid_argument("nonpositive Td for '" + label + "'");
  }
  Element e;
  e.kind = ElementKind::lossless_line;
  e.label = label;
  e.nodes = {add_node(p1p), add_node(p1m), add_node(p2p), add_node(p2m)};
  e.z0 = z0;
  e.delay = delay_s;
  elements_.push_back(std::move(e));
}

void Netlist::add_probe(const std::string& node) {
  int idx = find_node(node);
  if (idx < 0) throw std::invalid_argument("undefined probe node: '" + node + "'");
  probes_.push_back(idx);
}

std::vector<std::string> Netlist::probe_names() const {
  std::vector<std::string> out;
  out.reserve(probes_.size());
  for (int p : probes_) out.push_back(node_name(p));
  return out;
}

int Netlist::source_count() const {
  return static_cast<int>(
      std::count_if(elements_.begin(), elements_.end(),
                    [](const Element& e) { return e.is_source(); }));
}

bool operator==(const Netlist& a, const Netlist& b) {
  return a.title == b.title && a.node_names_ == b.node_names_ &&
         a.elements_ == b.elements_ && a.probes_ == b.probes_;
}

std::vector<std::string> validate(const Netlist& netlist) {
  std::vector<std::string> diags;
  if (netlist.source_count() == 0) diags.push_back("no AC source");
  for (int p : netlist.probes()) {
    if (p < 0 || p >= netlist.node_count()) {
      diags.push_back("probe refers to unknown node index " + std::to_string(p));
    }
  }
  // Ground reachability through admittance-bearing elements. Current sources
  // are open circuits and do not connect anything; a voltage source pins its
  // terminals and counts as a path.
  std::vector<std::vector<int>> adj(netlist.node_count());
  for (const Element& e : netlist.elements()) {
    if (e.kind == ElementKind::ac_current_source) continue;
    int n = e.terminal_count();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        adj[e.nodes[i]].push_back(e.nodes[j]);
        adj[e.nodes[j]].push_back(e.nodes[i]);
      }
    }
  }
  std::vector<char> seen(netlist.node_count(), 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        bfs.push(v);
      }
    }
  }
  for (int i = 1; i < netlist.node_count(); ++i) {
    if (!seen[i]) diags.push_back("floating node: " + netlist.node_name(i));
  }
  return diags;
}

namespace {

struct PendingProbe {
  std::string name;
  int line;
};

double parse_value_or_throw(const std::string& token, int line, const std::string& label) {
  auto v = parse_spice_value(token);
  if (!v) throw ParseError(line, "bad value '" + token + "' for '" + label + "'");
  if (!(*v > 0.0)) throw ParseError(line, "nonpositive value for '" + label + "'");
  return *v;
}

double parse_signed_or_throw(const std::string& token, int line, const std::string& what) {
  auto v = parse_spice_value(token);
  if (!v) throw ParseError(line, "bad " + what + " '" + token + "'");
  return *v;
}

}  // namespace

Netlist parse_netlist(std::string_view text) {
  Netlist netlist;
  std::vector<PendingProbe> pending;
  bool have_title = false;
  bool ended = false;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size() && !ended) {
    size_t nl = text.find('\n', pos);
    std::string_view raw = (nl == std::string_view::npos)
                               ? text.substr(pos)
                               : text.substr(pos, nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '*') continue;

    if (line.front() == '.') {
      auto tokens = split_tokens(line);
      std::string directive = to_lower(tokens[0]);
      if (directive == ".end") {
        ended = true;
      } else if (directive == ".title") {
        if (have_title) throw ParseError(line_no, "duplicate .title");
        size_t sp = line.find_first_of(" \t");
        netlist.title = (sp == std::string_view::npos) ? std::string()
                                                       : std::string(trim(line.substr(sp)));
        have_title = true;
      } else if (directive == ".probe") {
        if (tokens.size() < 2) throw ParseError(line_no, ".probe needs at least one node");
        for (size_t i = 1; i < tokens.size(); ++i) pending.push_back({tokens[i], line_no});
      } else {
        throw ParseError(line_no, "unknown directive '" + tokens[0] + "'");
      }
      continue;
    }

    auto tokens = split_tokens(line);
    const std::string& label = tokens[0];
    char k = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    try {
      switch (k) {
        case 'R':
        case 'C':
        case 'L': {
          if (tokens.size() != 4) throw ParseError(line_no, "expected '" + label + " n+ n- value'");
          double v = parse_value_or_throw(tokens[3], line_no, label);
          if (k == 'R') netlist.add_resistor(label, tokens[1], tokens[2], v);
          if (k == 'C') netlist.add_capacitor(label, tokens[1], tokens[2], v);
          if (k == 'L') netlist.add_inductor(label, tokens[1], tokens[2], v);
          break;
        }
        case 'T': {
          if (tokens.size() != 7) {
            throw ParseError(line_no, "expected '" + label + " p1+ p1- p2+ p2- Z0=val Td=val'");
          }
          std::optional<double> z0, td;
          for (size_t i = 5; i < 7; ++i) {
            std::string low = to_lower(tokens[i]);
            size_t eq = low.find('=');
            if (eq == std::string::npos) throw ParseError(line_no, "expected key=value, got '" + tokens[i] + "'");
            std::string key = low.substr(0, eq);
            std::string val = tokens[i].substr(eq + 1);
            if (key == "z0") z0 = parse_value_or_throw(val, line_no, label);
            else if (key == "td") td = parse_value_or_throw(val, line_no, label);
            else throw ParseError(line_no, "unknown line parameter '" + key + "'");
          }
          if (!z0 || !td) throw ParseError(line_no, "'" + label + "' needs both Z0= and Td=");
          netlist.add_lossless_line(label, tokens[1], tokens[2], tokens[3], tokens[4], *z0, *td);
          break;
        }
        case 'V':
        case 'I': {
          if (tokens.size() != 5 && tokens.size() != 6) {
            throw ParseError(line_no, "expected '" + label + " n+ n- AC amplitude [phase_deg]'");
          }
          if (to_lower(tokens[3]) != "ac") {
            throw ParseError(line_no, "expected AC keyword for '" + label + "'");
          }
          double amp = parse_value_or_throw(tokens[4], line_no, label);
          double phase = tokens.size() == 6
                             ? parse_signed_or_throw(tokens[5], line_no, "phase")
                             : 0.0;
          if (k == 'V') netlist.add_ac_voltage_source(label, tokens[1], tokens[2], amp, phase);
          else netlist.add_ac_current_source(label, tokens[1], tokens[2], amp, phase);
          break;
        }
        default:
          throw ParseError(line_no, "unknown element kind '" + std::string(1, label[0]) + "'");
      }
    } catch (const std::invalid_argument& err) {
      throw ParseError(line_no, err.what());
    }
  }

  for (const auto& p : pending) {
    if (netlist.find_node(p.name) < 0) {
      throw ParseError(p.line, "undefined probe node: '" + p.name + "'");
    }
    netlist.add_probe(p.name);
  }
  return netlist;
}

namespace {

void emit_element(std::ostream& os, const Netlist& n, const Element& e) {
  os << e.label;
  for (int i = 0; i < e.terminal_count(); ++i) os << ' ' << n.node_name(e.nodes[i]);
  switch (e.kind) {
    case ElementKind::resistor:
    case ElementKind::capacitor:
    case ElementKind::inductor:
      os << ' ' << format_value(e.value);
      break;
    case ElementKind::lossless_line:
      os << " Z0=" << format_value(e.z0) << " Td=" << format_value(e.delay);
      break;
    case ElementKind::ac_voltage_source:
    case ElementKind::ac_current_source:
      os << " AC " << format_value(e.value);
      if (e.phase_deg != 0.0) os << ' ' << format_value(e.phase_deg);
      break;
  }
  os << '\n';
}

}  // namespace

std::string emit_netlist(const Netlist& netlist, Dialect dialect,
                         const std::optional<AcCard>& ac) {
  std::ostringstream os;
  if (dialect == Dialect::native) {
    if (!netlist.title.empty()) os << ".title " << netlist.title << '\n';
    for (const Element& e : netlist.elements()) emit_element(os, netlist, e);
    if (!netlist.probes().empty()) {
      os << ".probe";
      for (int p : netlist.probes()) os << ' ' << netlist.node_name(p);
      os << '\n';
    }
    os << ".end\n";
    return os.str();
  }

  // ltspice: leading comment line, same element cards, .ac + .save directives
  os << "* " << (netlist.title.empty() ? "qsim export" : netlist.title) << '\n';
  for (const Element& e : netlist.elements()) emit_element(os, netlist, e);
  AcCard card = ac.value_or(AcCard{});
  os << ".ac " << (card.log_spacing ? "dec" : "lin") << ' ' << card.n_points << ' '
     << format_value(card.f_min) << ' ' << format_value(card.f_max) << '\n';
  if (!netlist.probes().empty()) {
    os << ".save";
    for (int p : netlist.probes()) os << " V(" << netlist.node_name(p) << ')';
    os << '\n';
  }
  os << ".end\n";
  return os.str();
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string netlist_digest(const Netlist& netlist) {
  uint64_t h = fnv1a64(emit_netlist(netlist, Dialect::native));
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace qsim
