// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   acceptance            run every criterion
//   acceptance 3 8 15     run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "ctrap/abm.hpp"
#include "ctrap/analysis.hpp"
#include "ctrap/meanfield.hpp"
#include "ctrap/strategy.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ctrap;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Strategy br(double a, double b, double e, double f) { return best_response(ModelParams(a, b, e), Probability(f)); }

double br_drift(const ModelParams& p, double f) {
  return drift(best_response(p, Probability(f)), Probability(f), p.eps());
}

// Grid points k * step for k = lo_k..hi_k, built from integers.
std::vector<double> grid(int lo_k, int hi_k, double step) {
  std::vector<double> out;
  for (int k = lo_k; k <= hi_k; ++k) out.push_back(k * step);
  return out;
}

Outcome best_response_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(0.02, 0.9), ub(0.1, 0.9), uf(0.0, 1.0);
  int agree = 0, total = 0;
  std::string first_miss;
  while (total < 1000) {
    const double a = ua(rng), b = ub(rng), f = uf(rng);
    const int box = oracle::brute_box(a, b);
    if (box > 400) continue;
    ++total;
    const auto want = oracle::brute_best_response(a, b, f, box);
    const auto got = br(a, b, 0.0, f);
    if (got == Strategy{want.m, want.tau}) {
      ++agree;
    } else if (first_miss.empty()) {
      first_miss = fmt::format(" first miss alpha={} beta={} f={} got {} want ({},{})", a, b, f,
                               to_string(got), want.m, want.tau);
    }
  }
  const double secs = elapsed_since(start);
  return {agree == total && secs < 60.0,
          fmt::format("{}/{} agree in {:.1f} s (limit 60 s){}", agree, total, secs, first_miss)};
}

Outcome indifference_boundary() {
  const ModelParams p(0.1, 0.4, 0.001);
  const double target = 0.118542;
  const auto bp = analytic_breakpoints(p);
  const double analytic = bp.f_11_22 ? bp.f_11_22->value() : NAN;
  const auto portrait = phase_portrait(p, 2000);
  double nearest = 2.0;
  for (const auto& seg : portrait.segments) {
    if (std::abs(seg.f_hi - target) < std::abs(nearest - target)) nearest = seg.f_hi;
  }
  const bool analytic_ok = std::abs(analytic - target) <= 1e-6;
  const bool portrait_ok = std::abs(nearest - target) <= 1e-6;
  return {analytic_ok && portrait_ok,
          fmt::format("analytic F+ = {:.7f} ({}), nearest portrait boundary {:.7f} ({})", analytic,
                      analytic_ok ? "ok" : "off", nearest, portrait_ok ? "ok" : "off by " +
                      fmt::format("{:.2e}", std::abs(nearest - target)))};
}

Outcome trap_region() {
  const ModelParams p(0.1, 0.4, 0.001);
  bool withdrawn = true;
  for (double f : grid(0, 999, 1e-4)) withdrawn &= br(0.1, 0.4, 0.001, f) == Strategy{0, 0};
  double worst = -1.0, worst_f = 0.0;
  for (double f : grid(1, 118542, 1e-6)) {
    const double d = br_drift(p, f);
    if (d > worst) {
      worst = d;
      worst_f = f;
    }
  }
  const double basin = trap_basin(p, 2000).f_star.value();
  const double basin0 = trap_basin(ModelParams(0.1, 0.4, 0.0), 2000).f_star.value();
  const bool drift_ok = worst <= 0.0;
  const bool basin_ok = std::abs(basin - 0.118542) <= 1e-4;
  const bool basin0_ok = std::abs(basin0 - 0.1) <= 1e-6;
  return {withdrawn && drift_ok && basin_ok && basin0_ok,
          fmt::format("(0,0) on [0,0.1): {}; max drift on (0,0.118542] = {:.3e} at f={} ({}); "
                      "trap_basin = {:.6f} ({}); eps=0 trap_basin = {:.6f} ({})",
                      withdrawn ? "yes" : "no", worst, worst_f, drift_ok ? "ok" : "positive",
                      basin, basin_ok ? "ok" : "want 0.118542", basin0, basin0_ok ? "ok" : "want 0.1")};
}

Outcome high_cost_poverty() {
  std::string detail;
  bool pass = true;
  for (double a : {0.26, 0.30, 0.34}) {
    const ModelParams p(a, 0.4, 0.001);
    double worst = -1.0;
    for (double f : grid(0, 1000, 1e-3)) worst = std::max(worst, br_drift(p, f));
    pass &= worst <= 0.0;
    detail += fmt::format("alpha={} max drift {:.3e}; ", a, worst);
  }
  return {pass, detail};
}

Outcome rich_fragile() {
  bool pass = true;
  std::string misses;
  int count = 0, held = 0;
  for (double b : {0.3, 0.4, 0.5}) {
    for (double a : {0.05, 0.1, 0.15}) {
      if (!(a < std::pow(2.0, b) - 1.0)) continue;
      ++count;
      const ModelParams p(a, b, 0.0);
      const auto s = best_response(p, Probability(0.999));
      const double d = drift(s, Probability(0.999), 0.0);
      const double at_one = br_drift(p, 1.0);
      const bool ok = d < 0.0 && s.m == s.tau && s.tau >= 2 && at_one == 0.0;
      held += ok;
      pass &= ok;
      if (!ok) misses += fmt::format(" ({},{}): {} drift {:.2e}, drift at 1 = {:.1e};", a, b, to_string(s), d, at_one);
    }
  }
  return {pass, fmt::format("{}/{} pairs hold.{}", held, count, misses)};
}

Outcome full_function() {
  const ModelParams p(0.1, 0.4);
  const auto s = best_response(p, Probability(1.0));
  const double gamma = full_function_optimum(p);
  const double u10 = utility({10, 10}, Probability(1.0), p);
  const double u11 = utility({11, 11}, Probability(1.0), p);
  const bool pass = s == Strategy{10, 10} && std::abs(gamma - 10.079) <= 1e-3 &&
                    std::abs(u10 - 1.51189) <= 1e-5 && std::abs(u11 - 1.50951) <= 1e-5 && u10 > u11;
  return {pass, fmt::format("best response {}, gamma = {:.4f}, U(10,10) = {:.6f}, U(11,11) = {:.6f}",
                            to_string(s), gamma, u10, u11)};
}

Outcome anchor_strategies() {
  const ModelParams p(0.1, 0.4);
  const auto at45 = best_response(p, Probability(0.45));
  const auto brute = oracle::brute_best_response(0.1, 0.4, 0.45, 200);
  const auto d = best_response_detail(p, Probability(0.5));
  const std::set<Strategy> top{d.best, d.runner_up.value_or(Strategy{-1, -1})};
  const bool pass = at45 == Strategy{3, 1} && Strategy{brute.m, brute.tau} == Strategy{3, 1} &&
                    top == std::set<Strategy>{{6, 2}, {3, 1}} && d.gap <= 3e-4;
  return {pass, fmt::format("f=0.45: {} (brute ({},{})); f=0.50: best {} runner-up {} gap {:.2e}",
                            to_string(at45), brute.m, brute.tau, to_string(d.best),
                            d.runner_up ? to_string(*d.runner_up) : "none", d.gap)};
}

Outcome overshoot_backfire() {
  const auto start = std::chrono::steady_clock::now();
  const ModelParams p(0.1, 0.4, 0.001);
  const auto s = overshoot_strategy(p, Probability(0.45), 2);
  const double d = drift(s, Probability(0.45), 0.001);
  const double shifted = trap_basin(p, 1000, 2).f_star.value();
  const double plain = trap_basin(p, 1000, 0).f_star.value();
  const double secs = elapsed_since(start);
  const bool pass = s == Strategy{5, 3} && std::abs(d + 0.0436) <= 1e-3 && shifted - plain >= 0.1 && secs < 60.0;
  return {pass, fmt::format("strategy {} drift {:.4f}; basin {:.4f} vs {:.4f} (+{:.4f}); {:.1f} s", to_string(s), d,
                            shifted, plain, shifted - plain, secs)};
}

Outcome inverted_u() {
  const std::vector<double> betas{0.3, 0.35, 0.4, 0.45, 0.5};
  const auto pts = redundancy_sweep(0.1, 0.001, betas, grid(0, 1000, 1e-3), worker_threads());
  bool pass = true;
  std::string detail;
  for (double b : betas) {
    std::vector<double> x, y;
    for (const auto& pt : pts) {
      if (pt.beta == b) {
        x.push_back(pt.tau_star);
        y.push_back(pt.buffer);
      }
    }
    const auto fit = ols_quadratic(x, y);
    pass &= fit.coefficients[2] < 0.0;
    detail += fmt::format("beta={} quad={:.4f}; ", b, fit.coefficients[2]);
  }
  return {pass, detail};
}

Outcome limit_cycle() {
  const ModelParams p(0.1, 0.4, 0.001);
  const auto traj = integrate(p, Probability(0.9), BestResponsePolicy{1.0}, 500.0);
  try {
    const auto c = detect_cycle(traj, 250.0);
    const double amp = c.f_max - c.f_min;
    return {c.detected && amp > 0.01,
            fmt::format("detected = {}, period = {}, amplitude {:.4f}", c.detected,
                        c.period ? fmt::format("{:.3f}", *c.period) : "none", amp)};
  } catch (const InsufficientDataError& e) {
    return {false, e.what()};
  }
}

Outcome abm_meanfield() {
  const auto start = std::chrono::steady_clock::now();
  AbmConfig c;
  c.n_agents = 2000;
  c.params = ModelParams(0.1, 0.4, 0.0);
  c.r = 1.0;
  c.xi = 0.0;
  c.f0 = Probability(0.5);
  c.t_end = 20.0;
  c.sample_dt = 0.1;
  c.seed = 11;
  const auto ens = run_replicas(c, 20, worker_threads());
  const double dt = 1e-3;
  const auto ode = integrate(c.params, c.f0, BestResponsePolicy{0.0}, c.t_end, dt);
  double sup = 0.0, at = 0.0;
  for (std::size_t i = 0; i < ens.sample_times.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::llround(ens.sample_times[i] / dt));
    const double gap = std::abs(ens.mean_f[i] - ode.f_values[std::min(k, ode.f_values.size() - 1)]);
    if (gap > sup) {
      sup = gap;
      at = ens.sample_times[i];
    }
  }
  const double secs = elapsed_since(start);
  return {sup < 0.05 && secs < 300.0, fmt::format("sup |ABM mean - ODE| = {:.4f} at t = {} ({:.1f} s)", sup, at, secs)};
}

AbmConfig desk_config(double r, double xi) {
  AbmConfig c;
  c.n_agents = 200;
  c.params = ModelParams(0.15, 0.4, 1e-4);
  c.r = r;
  c.xi = xi;
  c.f0 = Probability(0.18);
  c.t_end = 1000.0;
  c.sample_dt = 1000.0;
  c.seed = 7;
  return c;
}

Outcome escape_effect() {
  const auto start = std::chrono::steady_clock::now();
  const auto base = run_replicas(desk_config(1.0, 0.0), 100, worker_threads());
  const auto sticky = run_replicas(desk_config(2000.0, 1.0), 100, worker_threads());
  const double m1 = base.mean_f.back(), m2 = sticky.mean_f.back();
  const double s1 = base.sem_f.back(), s2 = sticky.sem_f.back();
  const double secs = elapsed_since(start);
  return {m2 - m1 > 2.0 * (s1 + s2) && secs < 600.0,
          fmt::format("mean final F {:.4f} (sem {:.4f}) vs baseline {:.4f} (sem {:.4f}); diff {:.4f}, need > {:.4f} "
                      "({:.1f} s)",
                      m2, s2, m1, s1, m2 - m1, 2.0 * (s1 + s2), secs)};
}

Outcome fragility_effect() {
  auto mean_sd = [](double r, double xi) {
    auto c = desk_config(r, xi);
    c.n_agents = 300;
    c.f0 = Probability(0.7);
    c.sample_dt = 1.0;
    const auto ens = run_replicas(c, 50, worker_threads());
    double total = 0.0;
    for (const auto& series : ens.replica_f) total += series_sd(ens.sample_times, series, c.t_end / 10.0);
    return total / ens.n_replicas;
  };
  const double base = mean_sd(1.0, 0.0);
  const double sticky = mean_sd(2000.0, 1.0);
  return {sticky > 2.0 * base,
          fmt::format("mean time-series sd {:.5f} vs baseline {:.5f}, ratio {:.2f} (need > 2)", sticky, base,
                      sticky / base)};
}

Outcome regression() {
  const char* env = std::getenv("CTRAP_COUNTRY_DATA");
  const fs::path data = env && *env ? fs::path(env) : fs::path(CTRAP_SOURCE_DIR) / "data" / "countries.csv";
  if (fs::exists(data)) {
    const auto loaded = load_country_csv(data);
    const auto fit = inverted_u_report(loaded.records).fit;
    const bool pass = std::abs(fit.coefficients[2] + 3.14) <= 0.05 && std::abs(fit.p_values[2] - 0.022) <= 0.005 &&
                      std::abs(fit.r_squared - 0.063) <= 0.005 && fit.n_obs == 95;
    return {pass, fmt::format("dataset {}: quad {:.4f}, p {:.4f}, R2 {:.4f}, N {}", data.string(),
                              fit.coefficients[2], fit.p_values[2], fit.r_squared, fit.n_obs)};
  }
  std::mt19937_64 rng(314);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  const double truth[3] = {60.0, 4.0, -3.14};
  const int trials = 1000;
  int covered = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x(500), y(500);
    for (int i = 0; i < 500; ++i) {
      x[i] = ux(rng);
      y[i] = truth[0] + truth[1] * x[i] + truth[2] * x[i] * x[i] + 5.0 * noise(rng);
    }
    const auto fit = ols_quadratic(x, y);
    bool all = true;
    for (int j = 0; j < 3; ++j) all &= std::abs(fit.coefficients[j] - truth[j]) <= 4.0 * fit.std_errors[j];
    covered += all;
  }
  return {covered >= 0.99 * trials,
          fmt::format("no country dataset at {}; synthetic recovery {}/{} trials within 4 se", data.string(), covered,
                      trials)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path work = fs::temp_directory_path() / fmt::format("ctrap_acceptance_{}", ::getpid());
  fs::remove_all(work);
  fs::create_directories(work);
  {
    std::ofstream csv(work / "countries.csv", std::ios::binary);
    csv << "country,inventory_days,eci\n";
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 4.0);
    for (int i = 0; i < 95; ++i) {
      const double x = -2.0 + 4.0 * i / 94.0;
      csv << "C" << i << ',' << 60.0 - 3.14 * x * x + noise(rng) << ',' << x << '\n';
    }
  }
  const std::vector<std::pair<std::string, std::string>> commands{
      {"portrait", "portrait --alpha 0.1 --beta 0.4 --eps 0.001"},
      {"overshoot", "overshoot --alpha 0.1 --beta 0.4 --eps 0.001 --s 2"},
      {"trajectory", "trajectory --alpha 0.1 --beta 0.4 --eps 0.001 --f0 0.9 --commit-t 1 --t-end 100"},
      {"diagram", "diagram --beta 0.4 --eps 0.001"},
      {"sweep", "sweep --alpha 0.1 --eps 0.001"},
      {"abm", "abm --n 200 --r 2000 --xi 1 --alpha 0.15 --beta 0.4 --eps 1e-4 --f0 0.18 --replicas 100 --seed 7"},
      {"fit", "fit --input " + (work / "countries.csv").string() + " --x-col eci --y-col inventory_days"},
  };
  int identical = 0;
  std::string detail;
  for (const auto& [name, args] : commands) {
    bool same = true;
    for (const char* run : {"a", "b"}) {
      const auto dir = work / name / run;
      const std::string cmd = fmt::format("{} {} --out-dir {} >/dev/null", CTRAP_CLI_PATH, args, dir.string());
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        same = false;
        detail += fmt::format(" {} exited abnormally;", name);
      }
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(work / name / "a")) {
      same &= slurp(entry.path()) == slurp(work / name / "b" / entry.path().filename());
      ++files;
    }
    same &= files > 1;
    identical += same;
    if (!same) detail += fmt::format(" {} differs;", name);
  }
  fs::remove_all(work);
  return {identical == static_cast<int>(commands.size()),
          fmt::format("{}/{} commands byte-identical across two runs.{}", identical, commands.size(), detail)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"best-response oracle equivalence", best_response_oracle},
      {"indifference boundary at 0.118542", indifference_boundary},
      {"trap region", trap_region},
      {"high-cost poverty", high_cost_poverty},
      {"rich-fragile instance", rich_fragile},
      {"best response at full functionality", full_function},
      {"anchor strategies at f = 0.45 and 0.50", anchor_strategies},
      {"overshoot backfire", overshoot_backfire},
      {"inverted-U of buffers", inverted_u},
      {"limit cycle under commitment", limit_cycle},
      {"ABM vs mean-field", abm_meanfield},
      {"ABM escape effect", escape_effect},
      {"ABM fragility effect", fragility_effect},
      {"inventory regression", regression},
      {"CLI determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !r.pass;
    std::cout << fmt::format("[{}] {:2d} {}: {}\n", r.pass ? "PASS" : "FAIL", id, criteria[i].first, r.detail)
              << std::flush;
  }
  std::cout << fmt::format("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
