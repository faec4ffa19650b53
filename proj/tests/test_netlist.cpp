#include <doctest.h>

#include <cmath>
#include <random>

#include "qsim/netlist.hpp"
#include "qsim/topology.hpp"

using namespace qsim;

TEST_SUITE("netlist") {

TEST_CASE("spice value forms") {
  auto within_ulp = [](double got, double want) {
    return std::abs(got - want) <= std::abs(std::nextafter(want, 2 * want) - want);
  };
  CHECK(*parse_spice_value("50") == 50.0);
  CHECK(*parse_spice_value("1e-8") == 1e-8);
  CHECK(*parse_spice_value("-2.5") == -2.5);
  CHECK(within_ulp(*parse_spice_value("30f"), 30e-15));
  CHECK(within_ulp(*parse_spice_value("30fF"), 30e-15));
  CHECK(*parse_spice_value("10p") == 10e-12);
  CHECK(*parse_spice_value("10n") == 1e-8);
  CHECK(*parse_spice_value("3u") == 3e-6);
  CHECK(*parse_spice_value("2m") == 2e-3);
  CHECK(*parse_spice_value("5k") == 5e3);
  CHECK(*parse_spice_value("2.5meg") == 2.5e6);
  CHECK(*parse_spice_value("1g") == 1e9);
  CHECK(*parse_spice_value("50Ohm") == 50.0);
  CHECK(!parse_spice_value(""));
  CHECK(!parse_spice_value("abc"));
  CHECK(!parse_spice_value("1.2.3"));

  // suffix arithmetic to within 1 ulp of 30e-15 (mantissa*factor rounding)
  CHECK(within_ulp(*parse_spice_value("30f"), 30e-15));
}

TEST_CASE("single-element grammar cases") {
  Netlist n = parse_netlist("R1 n1 0 50\n");
  REQUIRE(n.elements().size() == 1);
  CHECK(n.elements()[0].kind == ElementKind::resistor);
  CHECK(n.elements()[0].value == 50.0);
  CHECK(n.node_name(n.elements()[0].nodes[0]) == "n1");
  CHECK(n.elements()[0].nodes[1] == 0);

  Netlist c = parse_netlist("C1 n1 n2 30f\n");
  CHECK(c.elements()[0].kind == ElementKind::capacitor);
  CHECK(std::abs(c.elements()[0].value - 30e-15) <= 1e-29);

  Netlist t = parse_netlist("T1 n1 0 n2 0 Z0=50 Td=10n\n");
  REQUIRE(t.elements().size() == 1);
  CHECK(t.elements()[0].kind == ElementKind::lossless_line);
  CHECK(t.elements()[0].z0 == 50.0);
  CHECK(t.elements()[0].delay == 1e-8);

  Netlist v = parse_netlist("V1 in 0 AC 1 45\n");
  CHECK(v.elements()[0].value == 1.0);
  CHECK(v.elements()[0].phase_deg == 45.0);
  CHECK(v.elements()[0].phase_rad() == doctest::Approx(45.0 * M_PI / 180.0));
}

TEST_CASE("comments, case, title, probes") {
  const char* text =
      "* a comment\n"
      ".title my circuit\n"
      "r1 a 0 50\n"
      "i1 0 a AC 2e-3\n"
      "\n"
      ".probe a\n"
      ".end\n"
      "garbage after end is ignored\n";
  Netlist n = parse_netlist(text);
  CHECK(n.title == "my circuit");
  CHECK(n.elements().size() == 2);
  CHECK(n.elements()[0].label == "r1");
  REQUIRE(n.probes().size() == 1);
  CHECK(n.node_name(n.probes()[0]) == "a");
}

TEST_CASE("parse errors carry line numbers") {
  auto expect_err = [](const char* text, int line) {
    try {
      parse_netlist(text);
      FAIL_CHECK("expected ParseError for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_err("R1 n1 0\n", 1);                       // syntax: missing value
  expect_err("R1 n1 0 50\nR1 n2 0 10\n", 2);        // duplicate label
  expect_err("X1 n1 0 50\n", 1);                    // unknown element kind
  expect_err("R1 n1 0 -5\n", 1);                    // nonpositive value
  expect_err("R1 n1 0 0\n", 1);                     // nonpositive value
  expect_err("R1 n1 0 50\n.probe out9\n", 2);       // undefined probe node
  expect_err("R1 n1 0 50\n.foo\n", 2);              // unknown directive
  expect_err("V1 n1 0 1\n", 1);                     // missing AC keyword
  expect_err("T1 a 0 b 0 Z0=50\n", 1);              // missing Td
  expect_err("C1 a 0 30f\nL1 a 0 five\n", 2);       // bad value
}

TEST_CASE("canonical emission") {
  Netlist n;
  n.add_resistor("R1", "n1", "0", 50.0);
  std::string text = emit_netlist(n, Dialect::native);
  CHECK(text == "R1 n1 0 50\n.end\n");
}

TEST_CASE("round trip: parse(emit(n)) == n") {
  std::mt19937_64 rng(0xfeedbeef);
  std::uniform_real_distribution<double> uv(1e-15, 1e9);
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_int_distribution<int> nnodes(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    Netlist n;
    n.title = trial % 3 ? "random trial" : "";
    int nodes = nnodes(rng);
    auto node = [&](int i) { return i == 0 ? std::string("0") : "n" + std::to_string(i); };
    std::uniform_int_distribution<int> pick(0, nodes - 1);
    int elems = 1 + trial % 7;
    for (int e = 0; e < elems; ++e) {
      std::string a = node(pick(rng)), b = node(pick(rng));
      std::string s = std::to_string(e);
      switch (kind(rng)) {
        case 0: n.add_resistor("R" + s, a, b, uv(rng)); break;
        case 1: n.add_capacitor("C" + s, a, b, uv(rng)); break;
        case 2: n.add_inductor("L" + s, a, b, uv(rng)); break;
        case 3:
          n.add_lossless_line("T" + s, a, b, node(pick(rng)), node(pick(rng)), uv(rng),
                              uv(rng));
          break;
        case 4: n.add_ac_voltage_source("V" + s, a, b, uv(rng), uv(rng)); break;
        case 5: n.add_ac_current_source("I" + s, a, b, uv(rng), 0.0); break;
      }
    }
    for (int i = 1; i < nodes; ++i) {
      if (n.find_node("n" + std::to_string(i)) >= 0 && rng() % 4 == 0) {
        n.add_probe("n" + std::to_string(i));
      }
    }
    Netlist round = parse_netlist(emit_netlist(n, Dialect::native));
    CHECK(round == n);
  }
}

TEST_CASE("ltspice dialect carries .ac and line cards") {
  QubitUnitParams p;
  DriveSpec d;
  ArrayConfig cfg;
  cfg.io_lines = IoLines{50.0, 10e-9};
  Netlist n = build_linear_array(cfg, p, d);
  std::string text = emit_netlist(n, Dialect::ltspice, AcCard{5.5e9, 9.5e9, 4001, false});
  CHECK(text.find(".ac lin 4001 5.5e+09 9.5e+09") != std::string::npos);
  CHECK(text.find("Tin na 0 fd 0 Z0=50 Td=1e-08") != std::string::npos);
  CHECK(text.find(".save V(out1)") != std::string::npos);
  CHECK(text.rfind(".end\n") == text.size() - 5);
}

TEST_CASE("emitted linear array has the expected element census") {
  ArrayConfig cfg;  // 4-qubit linear defaults
  Netlist n = build_linear_array(cfg, QubitUnitParams{}, DriveSpec{});
  std::string text = emit_netlist(n, Dialect::native);
  auto count_prefix = [&](const std::string& prefix) {
    int c = 0;
    size_t pos = 0;
    while ((pos = text.find('\n' + prefix, pos)) != std::string::npos) {
      ++c;
      ++pos;
    }
    if (text.rfind(prefix, 0) == 0) ++c;
    return c;
  };
  CHECK(count_prefix("Rq") == 4);
  CHECK(count_prefix("Lq") == 4);
  CHECK(count_prefix("Cq") == 4);  // qubit caps; coupling caps are absent at c_qq=0
  CHECK(count_prefix("Rr") == 4);
  CHECK(count_prefix("Lr") == 4);
  CHECK(count_prefix("Cr") == 4);
  CHECK(count_prefix("Cc") == 4);
  CHECK(count_prefix("Cg") == 4);
  CHECK(count_prefix("V1") == 1);
  Netlist round = parse_netlist(text);
  CHECK(round == n);
}

TEST_CASE("validate flags structural problems") {
  SUBCASE("valid single unit") {
    Netlist n = build_unit(QubitUnitParams{}, DriveSpec{});
    CHECK(validate(n).empty());
  }
  SUBCASE("no source") {
    Netlist n = parse_netlist("R1 a 0 50\n");
    auto d = validate(n);
    REQUIRE(d.size() == 1);
    CHECK(d[0].find("no AC source") != std::string::npos);
  }
  SUBCASE("floating node") {
    Netlist n = parse_netlist(
        "V1 in 0 AC 1\n"
        "R1 in out 50\n"
        "R2 out 0 50\n"
        "C1 isolated other 1p\n");
    auto d = validate(n);
    REQUIRE(d.size() == 2);
    CHECK(d[0].find("floating node") != std::string::npos);
  }
  SUBCASE("node held only by a current source floats") {
    Netlist n = parse_netlist(
        "V1 in 0 AC 1\nR1 in 0 50\nI1 0 dangling AC 1\n");
    auto d = validate(n);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == "floating node: dangling");
  }
}

TEST_CASE("digest is stable and content sensitive") {
  Netlist a = build_unit(QubitUnitParams{}, DriveSpec{});
  Netlist b = build_unit(QubitUnitParams{}, DriveSpec{});
  CHECK(netlist_digest(a) == netlist_digest(b));
  QubitUnitParams p;
  p.c_q = 31e-15;
  Netlist c = build_unit(p, DriveSpec{});
  CHECK(netlist_digest(a) != netlist_digest(c));
  CHECK(netlist_digest(a).size() == 16);
}

}  // TEST_SUITE
