#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <tuple>
#include <vector>

#include "cutsim/kernel.hpp"
#include "cutsim/rng.hpp"

using namespace cutsim;

TEST_CASE("events fire in time order") {
  SimKernel k;
  std::vector<int> order;
  k.schedule(3.0, 0, [&] { order.push_back(3); });
  k.schedule(1.0, 0, [&] { order.push_back(1); });
  k.schedule(2.0, 0, [&] { order.push_back(2); });
  k.run(10.0);
  REQUIRE(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("same-time events fire in priority order") {
  SimKernel k;
  std::vector<int> order;
  k.schedule(1.0, 5, [&] { order.push_back(5); });
  k.schedule(1.0, 1, [&] { order.push_back(1); });
  k.schedule(1.0, 3, [&] { order.push_back(3); });
  k.run(1.0);
  REQUIRE(order == std::vector<int>{1, 3, 5});
}

TEST_CASE("same time and priority fall back to insertion order") {
  SimKernel k;
  std::vector<int> order;
  for (int i = 0; i < 8; ++i) {
    k.schedule(2.0, 4, [&, i] { order.push_back(i); });
  }
  k.run(2.0);
  REQUIRE(order == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("run fires events up to and including the bound") {
  SimKernel k;
  int fired = 0;
  k.schedule(1.0, 0, [&] { ++fired; });
  k.schedule(2.0, 0, [&] { ++fired; });
  k.schedule(3.0, 0, [&] { ++fired; });
  REQUIRE(k.run(2.5) == 2);
  REQUIRE(fired == 2);
  REQUIRE(k.now() == 2.5);
  REQUIRE(k.run(3.0) == 1);
  REQUIRE(fired == 3);
}

TEST_CASE("actions scheduled during a run still fire if in range") {
  SimKernel k;
  std::vector<double> times;
  k.schedule(1.0, 0, [&] {
    times.push_back(k.now());
    k.schedule(1.5, 0, [&] { times.push_back(k.now()); });
  });
  REQUIRE(k.run(2.0) == 2);
  REQUIRE(times == std::vector<double>{1.0, 1.5});
}

TEST_CASE("now inside an action equals the fire time") {
  SimKernel k;
  k.schedule(4.25, 2, [&] { REQUIRE(k.now() == 4.25); });
  k.run(5.0);
}

TEST_CASE("cancel removes a pending event") {
  SimKernel k;
  int fired = 0;
  auto h = k.schedule(1.0, 0, [&] { ++fired; });
  REQUIRE(k.cancel(h));
  REQUIRE_FALSE(k.cancel(h));
  k.run(2.0);
  REQUIRE(fired == 0);
}

TEST_CASE("cancel after firing returns false") {
  SimKernel k;
  auto h = k.schedule(1.0, 0, [] {});
  k.run(1.0);
  REQUIRE_FALSE(k.cancel(h));
}

TEST_CASE("default handle is invalid and cancels to false") {
  SimKernel k;
  EventHandle h;
  REQUIRE_FALSE(h.valid());
  REQUIRE_FALSE(k.cancel(h));
}

TEST_CASE("deadline_of reports the fire time of a pending event") {
  SimKernel k;
  auto h = k.schedule(7.5, 1, [] {});
  REQUIRE(k.deadline_of(h) == 7.5);
  k.run(8.0);
  REQUIRE_THROWS_AS(k.deadline_of(h), SimError);
}

TEST_CASE("scheduling in the past is rejected") {
  SimKernel k;
  k.schedule(2.0, 0, [] {});
  k.run(2.0);
  REQUIRE_THROWS_AS(k.schedule(1.0, 0, [] {}), ConfigError);
  // Scheduling exactly at the current time is allowed.
  int fired = 0;
  k.schedule(2.0, 0, [&] { ++fired; });
  k.run(2.0);
  REQUIRE(fired == 1);
}

TEST_CASE("running backwards is rejected") {
  SimKernel k;
  k.run(5.0);
  REQUIRE_THROWS_AS(k.run(4.0), ConfigError);
}

TEST_CASE("random workloads fire in lexicographic (time, priority, seq) order") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    SimKernel k;
    using Key = std::tuple<double, int, int>;
    std::vector<Key> fired;
    std::vector<Key> inserted;
    for (int i = 0; i < 200; ++i) {
      double at = static_cast<double>(rng.uniform_int(0, 50)) / 4.0;
      int prio = static_cast<int>(rng.uniform_int(0, 6));
      inserted.emplace_back(at, prio, i);
      k.schedule(at, prio, [&fired, at, prio, i] {
        fired.emplace_back(at, prio, i);
      });
    }
    k.run(100.0);
    REQUIRE(fired.size() == inserted.size());
    REQUIRE(std::is_sorted(fired.begin(), fired.end()));
    std::sort(inserted.begin(), inserted.end());
    REQUIRE(fired == inserted);
  }
}

TEST_CASE("identical schedules replay identically") {
  auto record = [] {
    SimKernel k;
    Rng rng(1234);
    std::vector<std::pair<double, int>> log;
    for (int i = 0; i < 100; ++i) {
      double at = static_cast<double>(rng.uniform_int(0, 40)) / 8.0;
      int prio = static_cast<int>(rng.uniform_int(0, 3));
      k.schedule(at, prio, [&log, &k, prio] { log.emplace_back(k.now(), prio); });
    }
    k.run(10.0);
    return log;
  };
  REQUIRE(record() == record());
}
