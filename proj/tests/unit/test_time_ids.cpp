#include "support.hpp"
#include "visurvey/error.hpp"
#include "visurvey/ids.hpp"

#include <set>
#include <thread>

using namespace visurvey;
using namespace std::chrono_literals;

TEST_CASE("timestamps format as UTC seconds") {
  const Timestamp t = support::at("2016-09-25T10:00:00Z");
  CHECK(format_timestamp(t) == "2016-09-25T10:00:00Z");
  CHECK(t.time_since_epoch().count() == 1474797600);
  CHECK(format_timestamp(support::at("2016-09-25T12:00:00+02:00")) == "2016-09-25T10:00:00Z");
}

TEST_CASE("malformed timestamps are rejected") {
  for (const char* bad : {"", "2016-09-25", "yesterday", "2016-13-01T00:00:00Z"}) {
    CAPTURE(bad);
    try {
      parse_timestamp(bad);
      FAIL("accepted");
    } catch (const ParseError& e) {
      CHECK(e.code() == "BAD_TIMESTAMP");
    }
  }
}

TEST_CASE("durations parse unit by unit") {
  CHECK(parse_duration("30m") == 30min);
  CHECK(parse_duration("1h30m") == 90min);
  CHECK(parse_duration("2d") == 48h);
  CHECK(parse_duration("45s") == 45s);
  CHECK(format_duration(90min) == "1h30m");
  CHECK(format_duration(0s) == "0s");
  for (const char* bad : {"", "h", "10", "5x", "1h-2m"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_duration(bad), ParseError);
  }
}

TEST_CASE("duration formatting roundtrips") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Duration d{static_cast<Duration::rep>(rng() % 10'000'000)};
    CHECK(parse_duration(format_duration(d)) == d);
  }
}

TEST_CASE("manual clock moves only when told") {
  ManualClock clock(support::at("2016-09-01T00:00:00Z"));
  CHECK(clock.now() == support::at("2016-09-01T00:00:00Z"));
  clock.advance(90s);
  CHECK(clock.now() == support::at("2016-09-01T00:01:30Z"));
  clock.set(support::at("2017-01-01T00:00:00Z"));
  CHECK(clock.now() == support::at("2017-01-01T00:00:00Z"));
}

TEST_CASE("sequential ids count per source") {
  SequentialIds ids;
  CHECK(ids.next("s") == "s-000001");
  CHECK(ids.next("s") == "s-000002");
  CHECK(ids.next("x") == "x-000003");
}

TEST_CASE("random ids are distinct under concurrency and reproducible by seed") {
  RandomIds ids;
  std::vector<std::vector<std::string>> produced(8);
  std::vector<std::thread> workers;
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      for (int i = 0; i < 500; ++i) produced[w].push_back(ids.next("s"));
    });
  }
  for (auto& t : workers) t.join();
  std::set<std::string> all;
  for (const auto& v : produced) all.insert(v.begin(), v.end());
  CHECK(all.size() == 4000);
  CHECK(all.begin()->size() == std::string("s-").size() + 16);

  RandomIds a(42), b(42);
  CHECK(a.next("s") == b.next("s"));
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
}
