#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "exact_riemann.hpp"
#include "hcfd/harness/report.hpp"
#include "hcfd/harness/runner.hpp"

using namespace hcfd;
using namespace hcfd::harness;
using doctest::Approx;

namespace {

RunOptions quiet() {
  RunOptions o;
  o.writeOutputs = false;
  return o;
}

CaseFile wave(Index3 cells, int blocks, int ranks, int iters) {
  GenOptions g;
  g.kind = "density-wave";
  g.cells = cells;
  g.blocks = blocks;
  g.ranks = ranks;
  auto c = genCase(g);
  c.time.maxIters = iters;
  return c;
}

std::vector<std::uint8_t> bytes(const RunResult& r) { return encodeDump(r.dump()); }

// L1 density error of a 1D Sod run against the exact solution.
double sodError(int cells) {
  GenOptions g;
  g.kind = "sod";
  g.cells = {cells, 1, 1};
  const auto c = genCase(g);
  const auto r = runCase(c, std::nullopt, quiet());
  const auto d = r.dump().blocks.at(0);
  const auto& L = c.initial.left;
  const auto& R = c.initial.right;
  const testing::ExactRiemann exact({L.rho, L.u, L.p}, {R.rho, R.u, R.p}, c.gas.gamma);
  const double t = r.metrics.finalTime;
  const double h = 1.0 / cells;
  double l1 = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double x = (i + 0.5) * h;
    l1 += std::abs(d.at(0, i, 0, 0) - exact.sample((x - c.initial.interface) / t).rho) * h;
  }
  return l1;
}

}  // namespace

TEST_CASE("case text round trip") {
  for (const char* kind : {"uniform", "density-wave", "sod", "corner"}) {
    GenOptions g;
    g.kind = kind;
    g.cells = {12, 10, 8};
    g.nodes = 2;
    g.cellsPerNode = 16 * 16 * 20;
    auto c = genCase(g);
    c.run.exchange.coalesce = false;
    c.output.dir = "out dir";
    c.devices.coprocessor.link->latency = 3.5e-6;
    const auto text = caseToText(c);
    const auto back = caseFromText(text);
    CHECK(caseToText(back) == text);
    CHECK(back.initial.kind == c.initial.kind);
    CHECK(back.zone.boundaries == c.zone.boundaries);
    CHECK(back.run.cuts == c.run.cuts);
    CHECK(back.devices.coprocessor.link->latency == 3.5e-6);
    CHECK(back.output.dir == "out dir");
  }
}

TEST_CASE("case errors") {
  CHECK_THROWS_AS(parseInitial("vortex"), CaseError);
  GenOptions g;
  g.kind = "vortex";
  CHECK_THROWS_AS(genCase(g), CaseError);
  g.kind = "uniform";
  g.cells = {0, 4, 4};
  CHECK_THROWS_AS(genCase(g), CaseError);
  auto text = caseToText(genCase(GenOptions{}));
  const auto pos = text.find("version");
  REQUIRE(pos != std::string::npos);
  text.replace(text.find('1', pos), 1, "9");
  CHECK_THROWS_AS(caseFromText(text), CaseError);
  auto c = genCase(GenOptions{});
  c.time.cfl = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("generated cases") {
  GenOptions g;
  g.kind = "sod";
  g.cells = {100, 2, 2};
  const auto sod = genCase(g);
  CHECK(sod.time.finalTime == 0.2);
  CHECK(sod.initial.left.rho == 1.0);
  CHECK(sod.initial.right.rho == 0.125);
  CHECK(sod.initial.right.p == 0.1);
  const auto plan = makePlan(sod);
  const auto b = initialBlock(sod, plan, 0, 5);
  CHECK(b.state(10, 0, 0).rho == 1.0);
  CHECK(b.state(90, 1, 1).rho == 0.125);

  g.kind = "density-wave";
  g.cells = {8, 8, 8};
  const auto w = genCase(g);
  const auto wb = initialBlock(w, makePlan(w), 0, 5);
  const auto geo = blockGeometry(makePlan(w), 0);
  for (int i = 0; i < 8; ++i) {
    const std::array<double, 3> x{geo.center(0, i), geo.center(1, 3), geo.center(2, 5)};
    CHECK(wb.state(i, 3, 5).rho == Approx(densityWaveExact(w, x, 0.0)).epsilon(1e-14));
  }
}

TEST_CASE("corner layout") {
  const auto cuts = cornerCuts(2, 100, 0.5);
  REQUIRE(cuts.size() == 11u);
  CHECK(cuts.front() == 0);
  CHECK(cuts[5] == 100);
  CHECK(cuts.back() == 200);
  const int cpu = cuts[1] - cuts[0];
  const int cop = cuts[5] - cuts[1] - (cuts[5] - cuts[4]);
  CHECK(cpu == 29);  // 100 / 3.5
  CHECK(cop / 3.0 / cpu == Approx(0.5).epsilon(0.05));
  CHECK_THROWS_AS(cornerCuts(1, 4, 1.0), CaseError);
}

TEST_CASE("uniform flow stays unchanged") {
  GenOptions g;
  g.kind = "uniform";
  g.cells = {10, 8, 8};
  g.blocks = 4;
  g.ranks = 2;
  auto c = genCase(g);
  c.time.convergenceTol = 0.0;
  const auto after = runCase(c, std::nullopt, quiet());
  CHECK(after.metrics.iterations == 50);
  c.time.maxIters = 0;
  const auto before = runCase(c, std::nullopt, quiet());
  CHECK(bytes(after) == bytes(before));
  CHECK(after.metrics.finalResidual == 0.0);
}

TEST_CASE("partition does not change the result") {
  const auto one = runCase(wave({16, 16, 16}, 1, 1, 3), std::nullopt, quiet());
  const auto eight = runCase(wave({16, 16, 16}, 8, 8, 3), std::nullopt, quiet());
  CHECK(eight.plan.blocks.size() == 8u);
  CHECK(bytes(one) == bytes(eight));
  auto uneven = wave({16, 16, 16}, 6, 3, 3);
  CHECK(bytes(runCase(uneven, std::nullopt, quiet())) == bytes(one));
  uneven.run.workers = 3;
  uneven.run.tileSize = 7;
  uneven.run.overlap = true;
  uneven.run.exchange.mode = exchange::ExchangeMode::Blocking;
  CHECK(bytes(runCase(uneven, std::nullopt, quiet())) == bytes(one));
}

TEST_CASE("field dumps") {
  const auto r = runCase(wave({6, 5, 4}, 2, 1, 1), std::nullopt, quiet());
  const auto whole = r.dump();
  REQUIRE(whole.blocks.size() == 1u);
  CHECK(whole.blocks[0].cells == Index3{6, 5, 4});
  const auto perBlock = r.dump(true);
  CHECK(perBlock.blocks.size() == 2u);
  for (const auto* d : {&whole, &perBlock}) {
    const auto enc = encodeDump(*d);
    CHECK(decodeDump(enc) == *d);
    auto bad = enc;
    bad[0] ^= 0xFF;
    CHECK_THROWS_AS(decodeDump(bad), Error);
    auto version = enc;
    version[4] = 7;
    CHECK_THROWS_AS(decodeDump(version), Error);
    auto cut = enc;
    cut.pop_back();
    CHECK_THROWS_AS(decodeDump(cut), Error);
  }
  // header: magic, version, count; then one block header and 5 * 120 values
  CHECK(encodeDump(whole).size() == 12u + 16u + 5u * 120u * 8u);
  // assembled values come from the owning block
  const auto& b1 = r.plan.blocks[1];
  CHECK(whole.blocks[0].at(2, b1.box.lo[0], b1.box.lo[1], b1.box.lo[2]) == perBlock.blocks[1].at(2, 0, 0, 0));
}

TEST_CASE("mcups") {
  CHECK(mcups(1'000'000, 50, 10.0) == 5.0);
  RunMetrics m;
  m.totalCells = 1'000'000;
  m.iterations = 50;
  m.wallTime = 10.0;
  CHECK(m.mcups() == 5.0);
  CHECK(std::isinf(m.compCommRatio()));
}

TEST_CASE("tables") {
  const auto empty = metricsTable({});
  CHECK(empty.rows.empty());
  CHECK(empty.csv().find('\n') == empty.csv().size() - 1);
  CHECK(parseTable(empty.csv()) == empty);

  const auto c = wave({8, 8, 8}, 2, 2, 2);
  const auto r = runCase(c, std::nullopt, quiet());
  const auto t = metricsTable({{"a, quoted \"label\"", c, r}, {"b", c, r}});
  CHECK(t.rows.size() == 2u);
  const auto back = parseTable(t.csv());
  CHECK(back == t);
  CHECK(back.rows[0][0] == "a, quoted \"label\"");
  CHECK(back.number(1, "iterations") == 2.0);
  CHECK(back.number(0, "mcups") == Approx(r.metrics.mcups()));
  CHECK_THROWS_AS(back.column("nope"), Error);
  CHECK_THROWS_AS(parseTable("a,b\n1\n"), Error);
  CHECK_THROWS_AS(parseTable(""), Error);
}

TEST_CASE("run outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "hcfd_unit_outputs";
  std::filesystem::remove_all(dir);
  auto c = wave({8, 8, 8}, 2, 1, 1);
  c.output.dir = dir.string();
  c.output.dumpField = true;
  const auto r = runCase(c);
  CHECK(readTable((dir / "metrics.csv").string()).rows.size() == 1u);
  CHECK(readDump((dir / "field.dump").string()) == r.dump());
  std::filesystem::remove_all(dir);
}

TEST_CASE("single-device load sweep is flat") {
  auto c = wave({16, 8, 8}, 2, 1, 1);
  const auto s = sweepLoadRatio(c, {0.5, 1.0, 2.0});
  REQUIRE(s.points.size() == 3u);
  for (const auto& p : s.points) {
    CHECK(p.modeledMcups == Approx(s.points[0].modeledMcups).epsilon(1e-12));
    CHECK(p.realizedRatio == 0.0);
  }
  CHECK(s.closedFormOptimum == 0.0);
  const auto t = s.table();
  CHECK(t.rows.size() == 3u);
  CHECK(t.number(2, "ratio") == 2.0);
}

TEST_CASE("closed-form balance") {
  CHECK(closedFormOptimum(1e5, 2, 3, 2e6, 2.6e6, 0.0) == Approx(1.3));
  // link time on the coprocessors pushes work back to the CPUs
  CHECK(closedFormOptimum(1e5, 2, 3, 2e6, 2.6e6, 1e-3) < 1.3);
}

TEST_CASE("scaling runs") {
  auto c = wave({12, 12, 12}, 0, 1, 2);
  SUBCASE("strong") {
    const auto s = benchScaling(c, ScalingMode::Strong, {1, 2});
    REQUIRE(s.points.size() == 2u);
    CHECK(s.points[0].speedup == 1.0);
    CHECK(s.points[1].cells == s.points[0].cells);
    CHECK(s.points[1].efficiency == Approx(s.points[1].speedup / 2.0));
    CHECK(s.table().rows.size() == 2u);
  }
  SUBCASE("weak") {
    const auto s = benchScaling(c, ScalingMode::Weak, {1, 2, 4});
    REQUIRE(s.points.size() == 3u);
    CHECK(s.points[1].cells == 2 * s.points[0].cells);
    CHECK(s.points[2].cells == 4 * s.points[0].cells);
    CHECK(s.points[2].efficiency == Approx(s.points[0].rankTimePerIteration / s.points[2].rankTimePerIteration));
    CHECK(s.timeVariation() >= 0.0);
  }
  SUBCASE("matrix") {
    ScalingOptions o;
    o.threads = {1, 2};
    const auto s = benchScaling(c, ScalingMode::Matrix, {2, 1}, o);
    REQUIRE(s.points.size() == 2u);
    CHECK(s.points[1].threads == 2);
    CHECK(s.points[1].efficiency == Approx(s.points[1].speedup));
  }
  CHECK(parseScalingMode(scalingModeName(ScalingMode::Matrix)) == ScalingMode::Matrix);
  CHECK_THROWS_AS(parseScalingMode("diagonal"), Error);
}

TEST_CASE("exact riemann oracle") {
  const testing::ExactRiemann sod({1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 1.4);
  CHECK(sod.pStar() == Approx(0.30313).epsilon(1e-4));
  CHECK(sod.uStar() == Approx(0.92745).epsilon(1e-4));
  CHECK(sod.sample(-10.0).rho == 1.0);
  CHECK(sod.sample(10.0).rho == 0.125);
}

TEST_CASE("sod error shrinks with resolution") {
  const double coarse = sodError(50);
  const double fine = sodError(100);
  CHECK(fine < coarse);
  CHECK(fine < 0.02);
}
