#include <algorithm>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <thread>

#include "doctest.h"
#include "fields.hpp"
#include "hcfd/exchange/halo.hpp"
#include "hcfd/exchange/transport.hpp"
#include "hcfd/integrator/metrics.hpp"

using namespace hcfd;
using namespace hcfd::exchange;
using partition::BoundaryKind;

namespace {

partition::ZoneSpec zoneOf(Index3 cells, bool periodic) {
  partition::ZoneSpec z;
  z.cells = cells;
  if (!periodic)
    for (auto& b : z.boundaries) b = BoundaryKind::ExtrapolationOutflow;
  return z;
}

partition::PartitionPlan planOf(const partition::ZoneSpec& z, int blocks, int ranks) {
  return partition::regroupBlocks(z, partition::splitZone(z, blocks), ranks, {}, 1.0);
}

// Blocks of one rank (all blocks for rank < 0) with random interiors and zero ghosts.
std::vector<BlockField> randomBlocks(const partition::PartitionPlan& plan, int rank, std::uint64_t seed) {
  std::vector<BlockField> out;
  for (const auto& b : plan.blocks) {
    if (rank >= 0 && plan.rankOf(b.id) != rank) continue;
    BlockField f(b.id, b.box.extents(), plan.haloWidth);
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(b.id));
    std::uniform_real_distribution<double> d(0.5, 1.5);
    for (int c = 0; c < kNumVars; ++c)
      for (int k = 0; k < f.extent()[2]; ++k)
        for (int j = 0; j < f.extent()[1]; ++j)
          for (int i = 0; i < f.extent()[0]; ++i) f.at(c, i, j, k) = d(rng);
    out.push_back(std::move(f));
  }
  return out;
}

// Runs fn(rank, transport) on one thread per rank.
void onRanks(int ranks, const std::function<void(int, Transport&)>& fn, NetworkModel model = {}) {
  InProcessNetwork net(ranks, model);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(ranks));
  for (int r = 0; r < ranks; ++r)
    threads.emplace_back([&, r] {
      try {
        InProcessTransport t(net, r);
        fn(r, t);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
        for (int o = 0; o < ranks; ++o) net.mailbox(o).fail("rank failed");
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Exchanges the blocks of every rank and returns them all, ascending id.
std::vector<BlockField> exchangeAll(const partition::PartitionPlan& plan, ExchangeOptions options, std::uint64_t seed) {
  auto halo = std::make_shared<const HaloPlan>(buildHaloPlan(plan));
  std::vector<std::vector<BlockField>> perRank(static_cast<std::size_t>(plan.ranks));
  onRanks(plan.ranks, [&](int r, Transport& t) {
    auto blocks = randomBlocks(plan, r, seed);
    RankExchanger ex(halo, plan, r, t, options);
    ex.exchange(blocks, {});
    perRank[static_cast<std::size_t>(r)] = std::move(blocks);
  });
  std::vector<BlockField> all(plan.blocks.size());
  for (auto& list : perRank)
    for (auto& b : list) all[static_cast<std::size_t>(b.id())] = std::move(b);
  return all;
}

}  // namespace

TEST_CASE("face regions of two abutting blocks") {
  const auto plan = planOf(zoneOf({32, 16, 16}, false), 2, 1);
  const auto halo = buildHaloPlan(plan);
  int copies = 0;
  for (const auto& t : halo.transfers) {
    if (t.srcBlock < 0 || t.srcBlock == t.dstBlock) continue;
    // edge and corner ghosts extend the outflow layer of the neighbor
    if (t.direction[1] != 0 || t.direction[2] != 0) {
      CHECK(t.map[1].step * t.direction[1] == 0);
      continue;
    }
    ++copies;
    CHECK(t.dstBox.extents() == Index3{5, 16, 16});
    CHECK(t.srcBox.extents() == Index3{5, 16, 16});
  }
  CHECK(copies == 2);
}

TEST_CASE("a periodic single block only wraps onto itself") {
  const auto plan = planOf(zoneOf({12, 12, 12}, true), 1, 1);
  const auto halo = buildHaloPlan(plan);
  CHECK(halo.transfers.size() == 26u);
  for (const auto& t : halo.transfers) CHECK(t.srcBlock == 0);
  CHECK(halo.messages.empty());
}

TEST_CASE("zones thinner than the halo next to a wall are rejected") {
  auto z = zoneOf({3, 16, 16}, true);
  z.boundaries[0] = BoundaryKind::SlipWall;
  z.boundaries[1] = BoundaryKind::SlipWall;
  const auto plan = planOf(z, 1, 1);
  try {
    buildHaloPlan(plan);
    FAIL("no error");
  } catch (const HaloError& e) {
    CHECK(std::string(e.what()).find("block 0") != std::string::npos);
  }
}

TEST_CASE("thin periodic blocks draw on several neighbors") {
  const auto plan = planOf(zoneOf({9, 6, 6}, true), 3, 1);
  const auto halo = buildHaloPlan(plan);
  std::set<int> sources;
  for (const auto& t : halo.transfers)
    if (t.dstBlock == 0 && t.direction == Index3{-1, 0, 0}) sources.insert(t.srcBlock);
  CHECK(sources.size() == 2u);
  // reaching past a direct neighbor is not supported
  CHECK_THROWS_AS(buildHaloPlan(planOf(zoneOf({16, 16, 16}, true), 5, 1)), HaloError);
}

TEST_CASE("send and receive regions mirror each other") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> ext(10, 36), cnt(1, 8);
  int plans = 0;
  while (plans < 200) {
    const Index3 cells{ext(rng), ext(rng), ext(rng)};
    auto z = zoneOf(cells, rng() % 3 != 0);
    partition::SplitResult s;
    try {
      s = partition::splitZone(z, cnt(rng));
    } catch (const partition::PlanError&) {
      continue;
    }
    bool thick = true;
    for (const auto& b : s.blocks)
      for (int a = 0; a < 3; ++a) thick = thick && b.box.extent(a) >= 5;
    if (!thick) continue;
    ++plans;
    const auto plan = partition::regroupBlocks(z, s, 1, {}, 1.0);
    const auto halo = buildHaloPlan(plan);
    for (const auto& t : halo.transfers) {
      const bool copy = t.srcBlock >= 0 && std::all_of(t.map.begin(), t.map.end(), [](const AxisMap& m) { return m.step == 1; });
      if (t.srcBlock >= 0 && std::none_of(t.map.begin(), t.map.end(), [](const AxisMap& m) { return m.step == 0; }))
        CHECK(t.srcBox.cells() == t.dstBox.cells());
      if (!copy) continue;
      const Index3 back{-t.direction[0], -t.direction[1], -t.direction[2]};
      const auto rev = std::find_if(halo.transfers.begin(), halo.transfers.end(), [&](const HaloTransfer& o) {
        return o.srcBlock == t.dstBlock && o.dstBlock == t.srcBlock && o.direction == back;
      });
      REQUIRE(rev != halo.transfers.end());
      CHECK(rev->dstBox.extents() == t.dstBox.extents());
    }
  }
}

TEST_CASE("pack then unpack is the identity") {
  const auto plan = planOf(zoneOf({20, 20, 10}, true), 4, 1);
  const auto halo = buildHaloPlan(plan);
  auto blocks = randomBlocks(plan, -1, 3);
  for (const auto& t : halo.transfers) {
    if (t.srcBlock < 0) continue;
    const auto& src = blocks[static_cast<std::size_t>(t.srcBlock)];
    BlockField a = blocks[static_cast<std::size_t>(t.dstBlock)], b = a;
    std::vector<double> buf;
    packTransfer(t, src, buf);
    CHECK(buf.size() == static_cast<std::size_t>(t.cells()) * kNumVars);
    CHECK(unpackTransfer(t, buf.data(), a) == buf.size());
    applyTransfer(t, &src, b);
    CHECK(test::bitwiseEqual(a.raw(), b.raw()));
  }
}

TEST_CASE("exchange modes give identical halos") {
  const auto plan = planOf(zoneOf({24, 24, 12}, true), 8, 4);
  ExchangeOptions tuned;
  const auto ref = exchangeAll(plan, tuned, 9);
  for (auto mode : {ExchangeMode::Blocking, ExchangeMode::NonBlocking})
    for (bool coalesce : {false, true})
      for (bool singular : {false, true}) {
        ExchangeOptions o;
        o.mode = mode;
        o.coalesce = coalesce;
        o.resolveSingular = singular;
        const auto got = exchangeAll(plan, o, 9);
        for (std::size_t b = 0; b < ref.size(); ++b) CHECK(test::bitwiseEqual(got[b].raw(), ref[b].raw()));
      }
}

TEST_CASE("partitioned halos equal the single-block wrap") {
  const int n = 16;
  const auto single = planOf(zoneOf({n, n, n}, true), 1, 1);
  const auto split = planOf(zoneOf({n, n, n}, true), 8, 4);
  auto one = randomBlocks(single, -1, 0);
  // copy the single block's interior into the partitioned blocks
  std::vector<std::vector<BlockField>> perRank(4);
  for (const auto& b : split.blocks) {
    BlockField f(b.id, b.box.extents(), split.haloWidth);
    for (int c = 0; c < kNumVars; ++c)
      for (int k = 0; k < f.extent()[2]; ++k)
        for (int j = 0; j < f.extent()[1]; ++j)
          for (int i = 0; i < f.extent()[0]; ++i) f.at(c, i, j, k) = one[0].at(c, b.box.lo[0] + i, b.box.lo[1] + j, b.box.lo[2] + k);
    perRank[static_cast<std::size_t>(split.rankOf(b.id))].push_back(std::move(f));
  }
  {
    InProcessNetwork net(1);
    InProcessTransport t(net, 0);
    RankExchanger ex(std::make_shared<const HaloPlan>(buildHaloPlan(single)), single, 0, t);
    ex.exchange(one, {});
  }
  auto halo = std::make_shared<const HaloPlan>(buildHaloPlan(split));
  onRanks(4, [&](int r, Transport& t) {
    RankExchanger ex(halo, split, r, t);
    ex.exchange(perRank[static_cast<std::size_t>(r)], {});
  });
  auto wrap = [n](int v) { return ((v % n) + n) % n; };
  int mismatches = 0;
  for (const auto& list : perRank)
    for (const auto& f : list) {
      const auto& box = split.blocks[static_cast<std::size_t>(f.id())].box;
      const auto alloc = f.allocated();
      for (int c = 0; c < kNumVars; ++c)
        for (int k = alloc.lo[2]; k < alloc.hi[2]; ++k)
          for (int j = alloc.lo[1]; j < alloc.hi[1]; ++j)
            for (int i = alloc.lo[0]; i < alloc.hi[0]; ++i) {
              const double want = one[0].at(c, wrap(box.lo[0] + i), wrap(box.lo[1] + j), wrap(box.lo[2] + k));
              const double got = f.at(c, i, j, k);
              if (std::memcmp(&want, &got, sizeof(double)) != 0) ++mismatches;
            }
    }
  CHECK(mismatches == 0);
}

TEST_CASE("uniform fields have uniform halos") {
  auto z = zoneOf({20, 10, 10}, false);
  z.boundaries[2] = z.boundaries[3] = BoundaryKind::Periodic;
  const auto plan = planOf(z, 2, 2);
  auto halo = std::make_shared<const HaloPlan>(buildHaloPlan(plan));
  const Vec5 q{{1.0, 0.5, 0.0, 0.0, 2.5}};
  onRanks(2, [&](int r, Transport& t) {
    std::vector<BlockField> blocks;
    for (int id : plan.blocksOfRank(r)) {
      BlockField f(id, plan.blocks[static_cast<std::size_t>(id)].box.extents(), plan.haloWidth);
      f.fill({});
      for (int k = 0; k < f.extent()[2]; ++k)
        for (int j = 0; j < f.extent()[1]; ++j)
          for (int i = 0; i < f.extent()[0]; ++i) f.set(i, j, k, q);
      blocks.push_back(std::move(f));
    }
    RankExchanger ex(halo, plan, r, t);
    ex.exchange(blocks, {});
    for (const auto& f : blocks)
      for (int c = 0; c < kNumVars; ++c)
        for (double v : f.component(c)) CHECK(v == q[c]);
  });
}

TEST_CASE("slip walls mirror the normal momentum") {
  auto z = zoneOf({10, 10, 10}, true);
  z.boundaries[2] = z.boundaries[3] = BoundaryKind::SlipWall;
  const auto plan = planOf(z, 1, 1);
  auto blocks = randomBlocks(plan, -1, 4);
  InProcessNetwork net(1);
  InProcessTransport t(net, 0);
  RankExchanger ex(std::make_shared<const HaloPlan>(buildHaloPlan(plan)), plan, 0, t);
  ex.exchange(blocks, {});
  const auto& f = blocks[0];
  for (int m = 1; m <= 5; ++m) {
    CHECK(f.at(0, 3, -m, 4) == f.at(0, 3, m - 1, 4));
    CHECK(f.at(2, 3, -m, 4) == -f.at(2, 3, m - 1, 4));
    CHECK(f.at(1, 3, -m, 4) == f.at(1, 3, m - 1, 4));
  }
}

TEST_CASE("singular points") {
  SUBCASE("four blocks around an edge") {
    const auto plan = planOf(zoneOf({20, 20, 10}, false), 4, 1);
    const auto halo = buildHaloPlan(plan);
    int fourWay = 0;
    for (const auto& p : halo.singular) {
      CHECK(p.owner == p.sharers.front());
      CHECK(std::is_sorted(p.sharers.begin(), p.sharers.end()));
      if (p.sharers.size() == 4u) ++fourWay;
    }
    CHECK(fourWay == 11);  // nodes z = 0..10 on the shared edge
  }
  SUBCASE("resolution agrees across ranks") {
    const auto plan = planOf(zoneOf({20, 20, 20}, true), 8, 4);
    auto halo = std::make_shared<const HaloPlan>(buildHaloPlan(plan));
    REQUIRE_FALSE(halo->singular.empty());
    std::vector<std::map<std::pair<int, int>, Vec5>> seen(4);
    std::vector<Vec5> ownerValue(halo->singular.size());
    onRanks(4, [&](int r, Transport& t) {
      auto blocks = randomBlocks(plan, r, 11);
      RankExchanger ex(halo, plan, r, t);
      ex.exchange(blocks, {});
      ex.resolveSingularPoints(blocks);
      for (std::size_t p = 0; p < halo->singular.size(); ++p)
        for (int b : halo->singular[p].sharers) {
          if (plan.rankOf(b) != r) continue;
          const Vec5* v = ex.singularValue(static_cast<int>(p), b);
          REQUIRE(v != nullptr);
          seen[static_cast<std::size_t>(r)][{static_cast<int>(p), b}] = *v;
          if (b == halo->singular[p].owner)
            ownerValue[p] = singularEstimate(halo->singular[p], plan, blocks[static_cast<std::size_t>(ex.localIndex(b))]);
        }
    });
    for (const auto& m : seen)
      for (const auto& [key, v] : m) CHECK(v == ownerValue[static_cast<std::size_t>(key.first)]);
  }
  SUBCASE("equal sharers need no change") {
    const auto plan = planOf(zoneOf({20, 20, 10}, false), 4, 1);
    auto halo = std::make_shared<const HaloPlan>(buildHaloPlan(plan));
    std::vector<BlockField> blocks;
    for (const auto& b : plan.blocks) {
      BlockField f(b.id, b.box.extents(), plan.haloWidth);
      f.fill({{1.0, 0.0, 0.0, 0.0, 2.5}});
      blocks.push_back(std::move(f));
    }
    InProcessNetwork net(1);
    InProcessTransport t(net, 0);
    RankExchanger ex(halo, plan, 0, t);
    ex.resolveSingularPoints(blocks);
    for (std::size_t p = 0; p < halo->singular.size(); ++p)
      for (int b : halo->singular[p].sharers) {
        const Vec5 local = singularEstimate(halo->singular[p], plan, blocks[static_cast<std::size_t>(b)]);
        CHECK(*ex.singularValue(static_cast<int>(p), b) == local);
      }
  }
}

TEST_CASE("message counts") {
  const auto plan = planOf(zoneOf({32, 32, 32}, true), 64, 8);
  const auto halo = buildHaloPlan(plan);
  for (int r = 0; r < 8; ++r) {
    ExchangeOptions tuned, naive;
    naive.coalesce = false;
    const auto a = epochTraffic(halo, r, tuned);
    const auto b = epochTraffic(halo, r, naive);
    const auto pairs = std::count_if(halo.messages.begin(), halo.messages.end(), [r](const PeerMessage& m) { return m.srcRank == r; });
    CHECK(a.messages == pairs);
    CHECK(b.messages > a.messages);
    CHECK(a.bytes == b.bytes);
  }
  // counters match the prediction
  auto shared = std::make_shared<const HaloPlan>(halo);
  onRanks(8, [&](int r, Transport& t) {
    auto blocks = randomBlocks(plan, r, 1);
    RankExchanger ex(shared, plan, r, t);
    ex.exchange(blocks, {});
    ex.exchange(blocks, {});
    const auto expect = epochTraffic(*shared, r, {});
    CHECK(ex.counters().epochs == 2);
    CHECK(ex.counters().messages == 2 * expect.messages);
    CHECK(ex.counters().bytes == 2 * expect.bytes);
  });
}

TEST_CASE("communication statistics") {
  ExchangeCounters none;
  none.epochs = 10;
  const auto s = commStats(none, 2.0);
  CHECK(s.compOnly);
  CHECK(std::isinf(s.ratio));
  ExchangeCounters c;
  c.epochs = 4;
  c.messages = 8;
  c.bytes = 4000;
  c.commTime = 0.5;
  const auto t = commStats(c, 2.0);
  CHECK_FALSE(t.compOnly);
  CHECK(t.ratio == 4.0);
  CHECK(t.messagesPerEpoch == 2.0);
  CHECK(t.bytesPerEpoch == 1000.0);
}

TEST_CASE("overlap work runs during the exchange") {
  const auto plan = planOf(zoneOf({24, 12, 12}, true), 2, 2);
  auto halo = std::make_shared<const HaloPlan>(buildHaloPlan(plan));
  onRanks(2, [&](int r, Transport& t) {
    auto blocks = randomBlocks(plan, r, 2);
    auto copy = blocks;
    RankExchanger ex(halo, plan, r, t);
    int calls = 0;
    ex.exchange(blocks, [&] { ++calls; });
    CHECK(calls == 1);
    RankExchanger plain(halo, plan, r, t);
    plain.exchange(copy, {});
    CHECK(test::bitwiseEqual(blocks[0].raw(), copy[0].raw()));
  });
}

TEST_CASE("tags") {
  const auto tag = makeTag(0x1AB, 0x123456);
  CHECK(tagEpoch(tag) == 0xAB);
  CHECK((tag & 0xFFFFFFu) == 0x123456u);
  CHECK(tagEpoch(makeTag(kCollectiveEpoch, 1)) == kCollectiveEpoch);
}

TEST_CASE("mailbox") {
  Mailbox box;
  Message a;
  a.tag = 5;
  a.source = 1;
  a.payload = {1.0};
  Message b = a;
  b.payload = {2.0};
  box.put(a);
  box.put(b);
  CHECK_FALSE(box.tryTake(1, 6).has_value());
  CHECK(box.take(1, 5, std::chrono::milliseconds(10)).payload[0] == 1.0);
  CHECK(box.tryTake(1, 5)->payload[0] == 2.0);
  try {
    box.take(2, 77, std::chrono::milliseconds(20));
    FAIL("no timeout");
  } catch (const TransportError& e) {
    CHECK(e.tag() == 77u);
  }
  box.fail("broken");
  CHECK_THROWS_AS(box.take(1, 5, std::chrono::milliseconds(1000)), TransportError);
}

TEST_CASE("modeled network delays delivery") {
  NetworkModel model{2e-3, 1e6};
  CHECK(model.transferSeconds(8000) == doctest::Approx(0.01));
  onRanks(
      2,
      [](int r, Transport& t) {
        if (r == 0) {
          Message m;
          m.tag = 1;
          m.source = 0;
          m.dest = 1;
          m.payload.assign(1000, 1.0);  // 8000 bytes: 10 ms
          t.send(std::move(m));
        } else {
          Stopwatch w;
          const auto m = t.recv(0, 1);
          CHECK(w.seconds() >= 0.009);
          CHECK(m.payload.size() == 1000u);
          CHECK(t.networkWaitSeconds() > 0.0);
        }
      },
      model);
}

TEST_CASE("reductions") {
  onRanks(4, [](int r, Transport& t) {
    RankReduction red(t);
    CHECK(red.sum(r + 1.0) == 10.0);
    CHECK(red.min(r + 1.0) == 1.0);
    CHECK(red.max(r + 1.0) == 4.0);
    const auto all = red.allGather({static_cast<double>(r), 2.0 * r});
    REQUIRE(all.size() == 4u);
    CHECK(all[3] == std::vector<double>{3.0, 6.0});
    red.barrier();
  });
}

TEST_CASE("wire frames") {
  Message m;
  m.tag = makeTag(3, 99);
  m.source = 2;
  m.dest = 5;
  m.payload = {1.5, -2.25, 1e300};
  const auto bytes = encodeFrame(m);
  CHECK(bytes.size() == 20u + 24u);
  const auto back = decodeFrame(bytes.data(), bytes.size());
  CHECK(back.tag == m.tag);
  CHECK(back.source == 2u);
  CHECK(back.dest == 5u);
  CHECK(back.payload == m.payload);
  CHECK_THROWS_AS(decodeFrame(bytes.data(), bytes.size() - 1), TransportError);
  CHECK_THROWS_AS(decodeFrame(bytes.data(), 7), TransportError);
}

TEST_CASE("socket transport") {
  const int ranks = 3;
  std::vector<Endpoint> eps(ranks);
  std::vector<int> fds(ranks);
  for (int r = 0; r < ranks; ++r) fds[static_cast<std::size_t>(r)] = SocketTransport::listenEphemeral("127.0.0.1", eps[static_cast<std::size_t>(r)].port);
  std::vector<std::thread> threads;
  std::vector<double> sums(ranks);
  std::vector<std::exception_ptr> errors(ranks);
  for (int r = 0; r < ranks; ++r)
    threads.emplace_back([&, r] {
      try {
        SocketTransport t(r, eps, fds[static_cast<std::size_t>(r)]);
        for (int o = 0; o < ranks; ++o) {
          if (o == r) continue;
          Message m;
          m.tag = makeTag(1, static_cast<std::uint32_t>(r));
          m.source = static_cast<std::uint32_t>(r);
          m.dest = static_cast<std::uint32_t>(o);
          m.payload.assign(10000, r + 0.5);
          t.send(std::move(m));
        }
        double s = 0.0;
        for (int o = 0; o < ranks; ++o)
          if (o != r)
            for (double v : t.recv(o, makeTag(1, static_cast<std::uint32_t>(o))).payload) s += v;
        RankReduction red(t);
        sums[static_cast<std::size_t>(r)] = red.sum(s);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  // each rank receives 10000 values from each peer
  const double expect = 10000.0 * 2.0 * (0.5 + 1.5 + 2.5);
  for (double s : sums) CHECK(s == expect);
}
