#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "hcfd/core/state.hpp"
#include "hcfd/util/csv.hpp"
#include "hcfd/util/worker_pool.hpp"

using namespace hcfd;

TEST_CASE("csv quoting") {
  CHECK(csvField("plain") == "plain");
  CHECK(csvField("a,b") == "\"a,b\"");
  CHECK(csvField("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csvField("two\nlines") == "\"two\nlines\"");
  CHECK(csvLine({"x", "y,z", ""}) == "x,\"y,z\",\n");
  const auto rows = parseCsv("a,\"b,c\",\"d\"\"e\"\n1,2,3\n");
  REQUIRE(rows.size() == 2u);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(rows[1] == std::vector<std::string>{"1", "2", "3"});
  CHECK(parseCsv("q,\"multi\nline\"\r\n")[0][1] == "multi\nline");
  CHECK_THROWS_AS(parseCsv("a,\"open\n"), Error);
}

TEST_CASE("csv line round trip") {
  const std::vector<std::string> fields{"", ",", "\"", "a\"b,c", " spaced ", "\n"};
  const auto rows = parseCsv(csvLine(fields));
  REQUIRE(rows.size() == 1u);
  CHECK(rows[0] == fields);
}

TEST_CASE("doubles print shortest and read back") {
  CHECK(formatDouble(0.1) == "0.1");
  CHECK(formatDouble(5.0) == "5");
  CHECK(formatDouble(-2.5e-7) == "-2.5e-07");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int n = 0; n < 2000; ++n) {
    const double v = std::ldexp(mant(rng), ex(rng));
    CHECK(std::stod(formatDouble(v)) == v);
  }
  CHECK(std::isinf(std::stod(formatDouble(std::numeric_limits<double>::infinity()))));
}

TEST_CASE("worker pool") {
  for (int threads : {0, 1, 3}) {
    CAPTURE(threads);
    WorkerPool pool(threads);
    CHECK(pool.threads() == threads);
    std::vector<std::atomic<int>> hits(200);
    pool.parallelFor(hits.size(), [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h == 1);
    pool.parallelFor(0, [](std::size_t) { FAIL("called"); });

    std::atomic<int> ran{0};
    CHECK_THROWS_WITH_AS(pool.parallelFor(50,
                                          [&](std::size_t i) {
                                            ++ran;
                                            if (i == 17) throw Error("item 17");
                                          }),
                         "item 17", Error);
    CHECK(ran >= 1);
    CHECK(ran <= 50);

    int value = 0;
    auto f = pool.submit([&] { value = 42; });
    f.get();
    CHECK(value == 42);
    auto g = pool.submit([] { throw Error("job"); });
    CHECK_THROWS_AS(g.get(), Error);
  }
}
