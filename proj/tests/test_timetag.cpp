#include "doctest.h"

#include <sstream>

#include "photongate/errors.hpp"
#include "photongate/simulation.hpp"
#include "photongate/timetag.hpp"

using namespace photongate;

namespace {

std::vector<ClickRecord> sample_stream() {
  auto cfg = SimConfig{};
  cfg.source = EmitterWithBackground{};
  cfg.params = DetectionParams::make(0.3, 0.1, 2.0, 5000);
  cfg.seed = 77;
  return simulate_timetags(cfg, GateConfig{});
}

int format_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)read_timetags_csv(in);
  } catch (const FormatError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

TEST_CASE("gate validation") {
  CHECK_NOTHROW(validate(GateConfig{}));
  GateConfig g;
  g.gate_width_ns = 60;  // wider than the dead time
  CHECK_THROWS_AS(validate(g), GateError);
  g = {};
  g.dead_time_ns = 600;
  CHECK_THROWS_AS(validate(g), GateError);
  g = {};
  g.gate_offset_ns = 490;
  CHECK_THROWS_AS(validate(g), GateError);
  g = {};
  g.gate_width_ns = 0;
  CHECK_THROWS_AS(validate(g), GateError);
  g = {};
  g.gate_offset_ns = -1;
  CHECK_THROWS_AS(GatedCounter(g, 10), GateError);
}

TEST_CASE("empty stream") {
  const auto c = ingest_records({}, GateConfig{}, 100);
  CHECK(c.n_all == 100);
  CHECK(c.n_00 == 100);
  CHECK(c.consistent());
}

TEST_CASE("several clicks in one gate collapse to one") {
  GatedCounter counter(GateConfig{}, 10);
  counter.add({Channel::A, 1002});
  counter.add({Channel::A, 1005});
  counter.add({Channel::A, 1019});
  const auto c = counter.counts();
  CHECK(c.n_10 == 1);
  CHECK(c.n_00 == 9);
  CHECK(counter.saturated() == 2);
}

TEST_CASE("gating keeps [offset, offset + width) only") {
  GateConfig g;
  g.gate_offset_ns = 100;
  g.gate_width_ns = 20;
  GatedCounter counter(g, 10);
  counter.add({Channel::A, 99});    // before the gate
  counter.add({Channel::A, 100});   // pulse 0, kept
  counter.add({Channel::B, 119});   // pulse 0, kept
  counter.add({Channel::B, 120});   // gate closed
  counter.add({Channel::A, 1610});  // pulse 3, kept
  counter.add({Channel::B, 5105});  // pulse 10 is past the last pulse
  const auto c = counter.counts();
  CHECK(c.n_11 == 1);
  CHECK(c.n_10 == 1);
  CHECK(c.n_01 == 0);
  CHECK(c.n_00 == 8);
  CHECK(counter.outside_gate() == 2);
  CHECK(counter.beyond_last_pulse() == 1);
}

TEST_CASE("records out of order or negative are rejected") {
  GatedCounter counter(GateConfig{}, 10);
  counter.add({Channel::A, 600});
  counter.add({Channel::B, 5});  // channels are sorted independently
  CHECK_THROWS_AS(counter.add({Channel::A, 599}), FormatError);
  CHECK_THROWS_AS(counter.add({Channel::B, -1}), FormatError);
}

TEST_CASE("out-of-gate records never change the tallies") {
  const auto records = sample_stream();
  const GateConfig gate;
  const auto ref = ingest_records(records, gate, 5000);
  std::vector<ClickRecord> noisy;
  for (const auto& r : records) {
    noisy.push_back(r);
    // Late copy in the same period, outside the 20 ns gate.
    noisy.push_back({r.channel, r.timestamp_ns + 200});
  }
  GatedCounter counter(gate, 5000);
  for (const auto& r : noisy) counter.add(r);
  CHECK(counter.counts() == ref);
  CHECK(counter.outside_gate() == records.size());
}

TEST_CASE("shifting by whole periods shifts pulses only") {
  const auto records = sample_stream();
  const GateConfig gate;
  const auto ref = ingest_records(records, gate, 5000);
  for (std::int64_t k : {1, 17, 1000}) {
    std::vector<ClickRecord> shifted;
    for (const auto& r : records) {
      shifted.push_back({r.channel, r.timestamp_ns + k * 500});
    }
    CHECK(ingest_records(shifted, gate, 5000 + k) ==
          [&] {
            auto c = ref;
            c.n_all += k;
            c.n_00 += k;
            return c;
          }());
  }
}

TEST_CASE("CSV round trip") {
  const auto records = sample_stream();
  std::stringstream ss;
  write_timetags_csv(ss, records);
  CHECK(read_timetags_csv(ss) == records);
}

TEST_CASE("binary round trip") {
  const auto records = sample_stream();
  std::stringstream ss;
  write_timetags_binary(ss, records);
  CHECK(ss.str().size() == 8 + 9 * records.size());
  CHECK(read_timetags_binary(ss) == records);
}

TEST_CASE("binary reader errors") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_timetags_binary(empty), FormatError);

  std::stringstream truncated;
  write_timetags_binary(truncated, std::vector<ClickRecord>{{Channel::B, 42}});
  std::string bytes = truncated.str();
  bytes.pop_back();
  std::istringstream cut(bytes);
  CHECK_THROWS_AS(read_timetags_binary(cut), FormatError);

  bytes = truncated.str();
  bytes[8] = 5;
  std::istringstream bad_channel(bytes);
  CHECK_THROWS_AS(read_timetags_binary(bad_channel), FormatError);
}

TEST_CASE("CSV reader errors carry line numbers") {
  CHECK(format_error_line("wrong,header\n") == 1);
  CHECK(format_error_line("channel,timestamp_ns\nA,1\nC,5\n") == 3);
  CHECK(format_error_line("channel,timestamp_ns\nA,1\n\nB,-3\n") == 4);
  CHECK(format_error_line("channel,timestamp_ns\nA,12x\n") == 2);
  CHECK(format_error_line("channel,timestamp_ns\nA 12\n") == 2);
  CHECK(format_error_line("") == 0);

  // A sink that rejects an unsorted stream reports the line of the record.
  std::istringstream in("channel,timestamp_ns\nA,10\nA,5\n");
  GatedCounter counter(GateConfig{}, 10);
  try {
    scan_timetags_csv(in, [&](const ClickRecord& r) { counter.add(r); });
    FAIL("expected a FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("key-value parsing") {
  std::istringstream in("# comment\n a = 1 \n\nb=two # trailing\n");
  const auto kv = read_key_values(in);
  REQUIRE(kv.size() == 2);
  CHECK(kv[0].key == "a");
  CHECK(kv[0].value == "1");
  CHECK(kv[0].line == 2);
  CHECK(kv[1].value == "two");
  CHECK(kv[1].line == 4);

  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(read_key_values(dup), FormatError);
  std::istringstream noeq("a = 1\njunk\n");
  try {
    (void)read_key_values(noeq);
    FAIL("expected a FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("counts block round trip") {
  const auto c = counts_from_totals(299613, 13902, 15);
  std::stringstream ss;
  write_counts_block(ss, c, {{"seed", "42"}, {"source.kind", "ideal"}});
  CHECK(ss.str().rfind(kCountsBlockHeader, 0) == 0);
  CHECK(ss.str().find("seed = 42\n") != std::string::npos);
  CHECK(read_counts_block(ss) == c);

  std::istringstream missing("n_all = 3\nn_00 = 3\nn_10 = 0\nn_01 = 0\n");
  CHECK_THROWS_AS(read_counts_block(missing), FormatError);
  std::istringstream bad("n_all = 3\nn_00 = x\nn_10 = 0\nn_01 = 0\nn_11 = 0\n");
  CHECK_THROWS_AS(read_counts_block(bad), FormatError);
  std::istringstream inconsistent("n_all = 4\nn_00 = 3\nn_10 = 0\nn_01 = 0\nn_11 = 0\n");
  CHECK_THROWS_AS(read_counts_block(inconsistent), FormatError);
}
