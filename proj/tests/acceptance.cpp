// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "photongate/analytic.hpp"
#include "photongate/criterion.hpp"
#include "photongate/error_model.hpp"
#include "photongate/simulation.hpp"

using namespace photongate;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::vector<std::string> notes;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back(what);
    }
  }
  void near(double got, double want, double tol, const std::string& what) {
    expect(std::abs(got - want) <= tol,
           fmt::format("{} = {:.8g}, want {:.8g} +- {:.3g}", what, got, want, tol));
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double sigma(double p, std::uint64_t m) { return std::sqrt(p * (1.0 - p) / static_cast<double>(m)); }

// Every outcome of the simulated counts within k binomial sigma of expected.
void within_sigma(Check& c, const ClickCounts& counts, const PhotonStats& expected, double k,
                  const std::string& label) {
  const auto s = stats_from_counts(counts);
  const double got[] = {s.p0(), s.p1(), s.p2()};
  const double want[] = {expected.p0(), expected.p1(), expected.p2()};
  for (int i = 0; i < 3; ++i) {
    const double tol = k * sigma(want[i], counts.n_all);
    c.expect(std::abs(got[i] - want[i]) <= tol,
             fmt::format("{} P({}) = {:.6g}, closed form {:.6g}, 4 sigma = {:.3g}", label, i,
                         got[i], want[i], tol));
  }
}

// --------------------------------------------------------------------------

Check sample_one() {
  Check c;
  const auto t0 = Clock::now();
  const auto counts = counts_from_totals(299613, 13902, 15);
  const auto stats = stats_from_counts(counts);
  const auto params = infer_params(stats, 0.3, counts.n_all);
  const auto v = classify(stats, counts, params);
  const double elapsed = seconds_since(t0);
  c.near(stats.p1(), 0.0464, 5e-5, "P(1)");
  c.near(stats.p2(), 5e-5, 1e-6, "P(2)");
  c.near(stats.mean_n(), 0.0465, 5e-5, "<n>");
  c.near(stats.q(), -0.04435, 1e-4, "Q");
  c.near(sbr_from_stats(stats).value, 21.5, 0.5, "SBR");
  c.expect(v.decision == Decision::Single, fmt::format("decision {}", to_string(v.decision)));
  c.expect(elapsed < 1.0, fmt::format("runtime {:.3f} s", elapsed));
  c.notes.push_back(fmt::format("P1 = {:.6f}, {:.3f} s", v.p1_critical, elapsed));
  return c;
}

Check samples_two_three() {
  Check c;
  struct Row {
    const char* name;
    std::uint64_t m, n1, n2;
    double mean_n, p1, p1_critical;
    Decision want;
  };
  const Row rows[] = {
      {"Sample 2", 300000, 11100, 30, 0.0372, 0.0370, 0.03685, Decision::Single},
      {"Sample 3", 300000, 15240, 195, 0.0521, 0.0508, 0.05150, Decision::NotSingle},
  };
  std::string summary;
  for (const auto& r : rows) {
    const auto counts = counts_from_totals(r.m, r.n1, r.n2);
    const auto stats = stats_from_counts(counts);
    const auto v = classify(stats, counts, infer_params(stats, 0.3, r.m));
    c.near(stats.mean_n(), r.mean_n, 5e-5, fmt::format("{} <n>", r.name));
    c.near(stats.p1(), r.p1, 5e-5, fmt::format("{} P(1)", r.name));
    c.near(v.p1_critical, r.p1_critical, 1.5e-4, fmt::format("{} P1", r.name));
    c.expect(v.decision == r.want,
             fmt::format("{} decision {}, want {}", r.name, to_string(v.decision), to_string(r.want)));
    summary += fmt::format("{}{} P1 = {:.6f} {}", summary.empty() ? "" : "; ", r.name,
                           v.p1_critical, to_string(v.decision));
  }
  c.notes.push_back(summary);
  return c;
}

Check coherent_row() {
  Check c;
  const auto t0 = Clock::now();
  const double n = 0.1046;
  const double mu = -2.0 * std::log1p(-n / 2.0);
  const auto analytic = hbt_transform(poisson_source(mu));
  c.near(analytic.mean_n(), n, 1e-12, "<n>");
  c.near(analytic.p1(), 0.0991, 5e-5, "analytic P(1)");

  SimConfig cfg;
  cfg.source = Coherent{mu};
  cfg.params = DetectionParams::make(1.0, 0.0, 0.0, 1000000);
  cfg.seed = 0x0C0FFEE;
  const auto counts = simulate_pulses(cfg);
  within_sigma(c, counts, analytic, 4.0, "coherent");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 5.0, fmt::format("runtime {:.3f} s", elapsed));
  c.notes.push_back(fmt::format("mu = {:.6f}, P(1) = {:.6f}, MC P(1) = {:.6f}, {:.3f} s", mu,
                                analytic.p1(), stats_from_counts(counts).p1(), elapsed));
  return c;
}

Check sbr0_curve() {
  Check c;
  const double low = sbr_threshold(1e-9);
  const double high = sbr_threshold(1.0);
  c.near(low, 2.4142, 0.005, "SBR0(0+)");
  c.near(high, 1.63, 0.02, "SBR0(1)");
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100; ++i) {
    const double t = sbr_threshold(i / 100.0);
    c.expect(t < prev, fmt::format("not decreasing at <n> = {}", i / 100.0));
    prev = t;
  }
  c.notes.push_back(fmt::format("SBR0(0+) = {:.5f}, SBR0(1) = {:.5f}", low, high));
  return c;
}

Check error_identities() {
  Check c;
  int points = 0;
  double worst = 0.0;
  for (int i = 1; i <= 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      for (int k = 1; k <= 10; ++k) {
        const double eta = 0.05 * i;
        const double delta = 0.1 * j;
        const double gamma = 0.1 * k;
        const auto p = DetectionParams::make(eta, delta, gamma, 10000);
        const auto d = systematic_deviation(p);
        const auto r = relative_deviations(p);
        ++points;
        worst = std::max(worst, std::abs(d.delta_p1 + d.delta_p2));
        c.expect(std::abs(d.delta_p1 + d.delta_p2) <= 1e-12,
                 fmt::format("dP1 + dP2 = {:.3g} at ({}, {}, {})", d.delta_p1 + d.delta_p2, eta,
                             delta, gamma));
        c.expect(r.r1 <= 0.0 && r.r2 >= 0.0,
                 fmt::format("R1 = {:.3g}, R2 = {:.3g} at ({}, {}, {})", r.r1, r.r2, eta, delta,
                             gamma));
        if (j == 0) {
          c.expect(d.delta_p1 == 0.0 && d.delta_p2 == 0.0 && r.r1 == 0.0 && r.r2 == 0.0,
                   fmt::format("nonzero deviation at delta = 0, ({}, {})", eta, gamma));
        }
      }
    }
  }
  c.expect(points == 1000, fmt::format("{} grid points", points));
  c.notes.push_back(fmt::format("{} points, max |dP1 + dP2| = {:.3g}", points, worst));
  return c;
}

Check oracle_suite() {
  Check c;
  const auto t0 = Clock::now();
  const std::uint64_t m = 1000000;
  int combos = 0;
  std::uint64_t seed = 1000;
  for (double eta : {0.02, 0.1, 0.5}) {
    for (double delta : {0.0, 0.3}) {
      const auto p = DetectionParams::make(eta, delta, 0.2, m);
      struct Case {
        std::string name;
        SourceModel source;
        PhotonStats expected;
      };
      const bool balanced = delta == 0.0;
      std::vector<Case> cases;
      for (std::uint32_t s : {1u, 2u, 5u}) {
        cases.push_back({fmt::format("ideal s={}", s), IdealEmitters{s},
                         balanced ? multi_emitter_stats(s, eta)
                                  : source_stats(IdealEmitters{s}, p)});
      }
      cases.push_back({"emitter+background", EmitterWithBackground{},
                       balanced ? single_with_background_stats(p) : unbalanced_stats(p)});
      cases.push_back({"coherent", Coherent{0.2},
                       balanced ? hbt_transform(poisson_source(0.2 * eta))
                                : source_stats(Coherent{0.2}, p)});
      for (const auto& cs : cases) {
        SimConfig cfg;
        cfg.source = cs.source;
        cfg.params = p;
        cfg.seed = ++seed;
        within_sigma(c, simulate_pulses(cfg), cs.expected, 4.0,
                     fmt::format("{} eta={} delta={}", cs.name, eta, delta));
        ++combos;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(combos >= 27, fmt::format("only {} combinations", combos));
  c.expect(elapsed < 60.0, fmt::format("runtime {:.1f} s", elapsed));
  c.notes.push_back(fmt::format("{} combinations at M = 1e6, {:.2f} s", combos, elapsed));
  return c;
}

Check sub_poissonian() {
  Check c;
  for (int i = 0; i <= 100; ++i) {
    const double eta = i / 100.0;
    const auto s = multi_emitter_stats(1, eta);
    c.expect(std::abs(s.q() + eta) <= 1e-12, fmt::format("Q = {:.17g} at eta = {}", s.q(), eta));
  }
  std::uint64_t coincidences = 0;
  std::uint64_t seed = 1;
  for (std::uint64_t m : {1ull, 10ull, 1000ull, 100000ull, 1000000ull}) {
    for (double eta : {0.05, 0.5, 1.0}) {
      for (double delta : {0.0, 0.3}) {
        if ((1 + delta) * eta > 1.0) continue;
        SimConfig cfg;
        cfg.source = IdealEmitters{1};
        cfg.params = DetectionParams::make(eta, delta, 0.0, m);
        cfg.seed = ++seed;
        coincidences += simulate_pulses(cfg).n_11;
      }
    }
  }
  c.expect(coincidences == 0, fmt::format("{} simulated coincidences", coincidences));
  double worst = 0.0;
  for (int i = 0; i <= 80; ++i) {
    const double mu = i * 0.05;
    const auto s = hbt_transform(poisson_source(mu));
    worst = std::max(worst, std::abs(s.q() + s.mean_n() / 2));
  }
  c.expect(worst <= 1e-12, fmt::format("coherent |Q + <n>/2| = {:.3g}", worst));
  c.notes.push_back(fmt::format("coherent max |Q + <n>/2| = {:.3g}", worst));
  return c;
}

Check determinism() {
  Check c;
  spdlog::set_level(spdlog::level::off);
  const auto dir = std::filesystem::temp_directory_path() /
                   fmt::format("photon-gate-acceptance-{}", ::getpid());
  std::filesystem::create_directories(dir);
  const auto cfg = (dir / "run.cfg").string();
  std::ofstream(cfg) << "source.kind = background\n"
                        "params.eta = 0.1\n"
                        "params.delta = 0.3\n"
                        "params.gamma = 0.2\n"
                        "cycles = 2000000\n"
                        "seed = 314159\n"
                        "sim.block_size = 10000\n";
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::vector<std::string> outputs;
  for (const char* threads : {"1", "4", "0"}) {
    for (const char* format : {"counts", "csv"}) {
      const auto out = (dir / fmt::format("out-{}.{}", threads, format)).string();
      std::ostringstream sink;
      const int code = cli::run({"simulate", "--config", cfg, "--output", out, "--threads",
                                 threads, "--format", format},
                                sink, sink);
      c.expect(code == 0, fmt::format("simulate exit {} ({})", code, sink.str()));
      outputs.push_back(slurp(out));
    }
  }
  for (std::size_t i = 2; i < outputs.size(); ++i) {
    c.expect(outputs[i] == outputs[i % 2],
             fmt::format("output {} differs between thread counts", i));
  }
  c.expect(!outputs[0].empty(), "empty output");
  std::filesystem::remove_all(dir);
  c.notes.push_back("threads 1, 4, all; counts and csv outputs byte-identical");
  return c;
}

Check critical_shape() {
  Check c;
  double p1_first = 0, p2_first = 0, p1_last = 0, p2_last = 0;
  const int steps = 50;
  for (int i = 0; i < steps; ++i) {
    const double eta = 0.01 + (0.5 - 0.01) * i / (steps - 1);
    const auto p = DetectionParams::make(eta, 0.3, 0.2, 10000);
    const double n = single_with_background_stats(p).mean_n();
    const auto cv = corrected_critical_values(n, p);
    c.expect(cv.p1_corrected >= cv.p1_bound,
             fmt::format("P1 below the uncorrected bound at eta = {}", eta));
    c.expect(cv.p2_corrected <= cv.p2_bound,
             fmt::format("P2 above the uncorrected bound at eta = {}", eta));
    if (i == 0) {
      p1_first = cv.p1_corrected;
      p2_first = cv.p2_corrected;
    }
    p1_last = cv.p1_corrected;
    p2_last = cv.p2_corrected;
  }
  const double rise1 = p1_last / p1_first;
  const double rise2 = p2_last / p2_first;
  c.expect(rise2 > rise1, fmt::format("P2 rise x{:.3g} not above P1 rise x{:.3g}", rise2, rise1));
  c.notes.push_back(fmt::format("P1 rises x{:.3g}, P2 rises x{:.3g}", rise1, rise2));
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria = {
      {"Sample 1 counts through the full pipeline", sample_one},
      {"Samples 2 and 3 critical values and decisions", samples_two_three},
      {"Coherent light row, analytic and Monte Carlo", coherent_row},
      {"SBR0 endpoints and monotone curve", sbr0_curve},
      {"Error-model identities on a 1000-point grid", error_identities},
      {"Monte Carlo against closed forms, 30 combinations", oracle_suite},
      {"Exact sub-Poissonian fixtures", sub_poissonian},
      {"Simulate output byte-identical across runs and threads", determinism},
      {"Critical-value curves along the efficiency axis", critical_shape},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.notes.push_back(fmt::format("exception: {}", e.what()));
    }
    failures += c.ok ? 0 : 1;
    fmt::print("{} {} {}\n", c.ok ? "PASS" : "FAIL", index, name);
    for (const auto& note : c.notes) {
      fmt::print("       {}\n", note);
    }
  }
  fmt::print("{} of {} criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
