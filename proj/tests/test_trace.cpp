#include <sstream>

#include <catch2/catch_amalgamated.hpp>
#include "scd/trace.hpp"

using namespace scd;

namespace {

Trace small_trace() {
  Trace t;
  t.label = TraceLabel::DirectAttack;
  t.records.push_back(DeltaRecord{1, {10, 20, 30, 40, 50, 60, 1000}});
  t.records.push_back(ForkRecord{1, 2});
  t.records.push_back(DeltaRecord{2, {1, 2, 3, 4, 5, 6, 500}});
  t.records.push_back(ExitRecord{2});
  t.records.push_back(DeltaRecord{1, {7, 8, 9, 10, 11, 12, 2000}});
  return t;
}

Trace roundtrip(const Trace& t) {
  std::stringstream ss;
  write_trace(t, ss);
  return read_trace(ss, "mem");
}

}  // namespace

TEST_CASE("round-trip reproduces the trace exactly") {
  const Trace t = small_trace();
  CHECK(roundtrip(t) == t);
}

TEST_CASE("empty trace round-trips as header plus label") {
  Trace t;
  t.label = TraceLabel::Benign;
  std::stringstream ss;
  write_trace(t, ss);
  CHECK(ss.str() == "scdtrace v1\nLABEL,benign\n");
  CHECK(roundtrip(t) == t);
}

TEST_CASE("parse errors carry the offending line") {
  const auto read = [](const std::string& text) {
    std::stringstream ss(text);
    return read_trace(ss, "f");
  };
  CHECK_THROWS_WITH(read(""), Catch::Matchers::ContainsSubstring("missing header"));
  CHECK_THROWS_WITH(read("scdtrace v2\nLABEL,benign\n"),
                    Catch::Matchers::ContainsSubstring("unsupported trace version"));
  CHECK_THROWS_WITH(read("nonsense\n"), Catch::Matchers::ContainsSubstring("not a trace file"));
  CHECK_THROWS_WITH(read("scdtrace v1\n"), Catch::Matchers::ContainsSubstring("missing LABEL"));
  CHECK_THROWS_WITH(read("scdtrace v1\nLABEL,benign\n1,100,2,3\n"),
                    Catch::Matchers::ContainsSubstring("f:3"));
  CHECK_THROWS_WITH(read("scdtrace v1\nLABEL,benign\n1,100,2,3,4,5,6,x\n"),
                    Catch::Matchers::ContainsSubstring("bad numeric field"));
  CHECK_THROWS_WITH(read("scdtrace v1\nLABEL,benign\nFORK,1\n"),
                    Catch::Matchers::ContainsSubstring("FORK record needs 2 fields"));
  CHECK_THROWS_WITH(read("scdtrace v1\nLABEL,weird\n"),
                    Catch::Matchers::ContainsSubstring("unknown trace label"));
}

TEST_CASE("validate_trace enforces positive cycles and lifecycle nesting") {
  Trace t = small_trace();
  CHECK(validate_trace(t).ok);

  Trace zero = t;
  std::get<DeltaRecord>(zero.records[0]).delta.elapsed_cycles = 0;
  CHECK_FALSE(validate_trace(zero).ok);

  Trace after_exit = t;
  after_exit.records.push_back(DeltaRecord{2, {0, 0, 0, 0, 0, 0, 10}});
  const auto r = validate_trace(after_exit);
  CHECK_FALSE(r.ok);
  CHECK(r.violation.find("after EXIT") != std::string::npos);

  Trace double_fork = t;
  double_fork.records.push_back(ForkRecord{1, 2});
  CHECK_FALSE(validate_trace(double_fork).ok);

  Trace self_fork;
  self_fork.records.push_back(ForkRecord{3, 3});
  CHECK_FALSE(validate_trace(self_fork).ok);

  // a child acting before its FORK record
  Trace early;
  early.records.push_back(DeltaRecord{2, {0, 0, 0, 0, 0, 0, 10}});
  early.records.push_back(ForkRecord{1, 2});
  CHECK_FALSE(validate_trace(early).ok);
}

TEST_CASE("root tid discovery") {
  const Trace t = small_trace();
  CHECK(root_tids(t) == std::vector<std::uint32_t>{1});
  Trace two;
  two.records.push_back(DeltaRecord{5, {0, 0, 0, 0, 0, 0, 10}});
  two.records.push_back(DeltaRecord{9, {0, 0, 0, 0, 0, 0, 10}});
  CHECK(root_tids(two) == std::vector<std::uint32_t>{5, 9});
}
