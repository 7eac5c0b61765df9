// ctrap: command-line front end for the contagious-disruption toolkit.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid flags or config,
// 3 I/O failure, 4 data error.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "ctrap/abm.hpp"
#include "ctrap/analysis.hpp"
#include "ctrap/io.hpp"
#include "ctrap/meanfield.hpp"
#include "ctrap/strategy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctrap;

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitData = 4;
constexpr std::uint64_t kDefaultSeed = 20240917;

class FlagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { kReal, kInt, kSeed, kString, kGrid, kRealList };

struct OptionSpec {
  std::string key;  // config key; the flag is --key with '_' -> '-'
  Kind kind;
  json fallback;    // null means required
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string description;
  std::vector<OptionSpec> options;
};

OptionSpec alpha_opt() { return {"alpha", Kind::kReal, nullptr, "input cost per attempted supplier (required)"}; }
OptionSpec beta_opt() { return {"beta", Kind::kReal, nullptr, "returns-to-complexity exponent in (0, 1) (required)"}; }
OptionSpec eps_opt() { return {"eps", Kind::kReal, 0.001, "exogenous failure rate"}; }

std::vector<CommandSpec> command_specs() {
  const OptionSpec resolution{"resolution", Kind::kInt, 1000, "grid cells scanned before bisecting boundaries"};
  return {
      {"portrait", "phase portrait segments, trap basin and analytic breakpoints",
       {alpha_opt(), beta_opt(), eps_opt(), resolution}},
      {"overshoot", "phase portrait under the best response shifted by (s, s)",
       {alpha_opt(), beta_opt(), eps_opt(), resolution,
        {"s", Kind::kInt, 2, "extra attempted and required inputs"}}},
      {"trajectory", "mean-field trajectory and cycle report",
       {alpha_opt(), beta_opt(), eps_opt(),
        {"f0", Kind::kReal, 0.5, "initial functional fraction"},
        {"t_end", Kind::kReal, 100.0, "integration horizon"},
        {"dt", Kind::kReal, 1e-3, "RK4 step"},
        {"commit_t", Kind::kReal, 0.0, "strategy commitment time; 0 re-optimizes every step"},
        {"policy", Kind::kString, "best-response", "best-response | overshoot:S | fixed:M,TAU"},
        {"stride", Kind::kInt, 100, "write every stride-th step (the final step is always written)"},
        {"transient", Kind::kReal, nullptr, "cycle detection ignores t < transient (default t_end / 2)"}}},
      {"diagram", "best response and drift sign over an (alpha, f) grid",
       {beta_opt(), eps_opt(),
        {"alpha_grid", Kind::kGrid, "0.02:0.5:25", "alpha grid lo:hi:count"},
        {"f_grid", Kind::kGrid, "0:1:101", "f grid lo:hi:count"}}},
      {"sweep", "threshold and buffer of the best response across beta",
       {alpha_opt(), eps_opt(),
        {"betas", Kind::kRealList, json::array({0.3, 0.35, 0.4, 0.45, 0.5}), "comma-separated beta values"},
        {"f_grid", Kind::kGrid, "0:1:1001", "f grid lo:hi:count"}}},
      {"abm", "agent-based ensemble with sticky links and preferential attachment",
       {alpha_opt(), beta_opt(), {"eps", Kind::kReal, 1e-4, "exogenous failure rate"},
        {"n", Kind::kInt, 200, "number of agents"},
        {"r", Kind::kReal, 1.0, "weight multiplier for suppliers that delivered"},
        {"xi", Kind::kReal, 0.0, "preferential-attachment exponent"},
        {"f0", Kind::kReal, 0.5, "initial functional fraction"},
        {"t_end", Kind::kReal, 1000.0, "simulated time"},
        {"sample_dt", Kind::kReal, 1.0, "sampling interval"},
        {"replicas", Kind::kInt, 10, "number of replicas"},
        {"seed", Kind::kSeed, kDefaultSeed, "base seed"}}},
      {"fit", "quadratic least-squares fit of a country dataset",
       {{"input", Kind::kString, nullptr, "CSV file with a header row (required)"},
        {"x_col", Kind::kString, "eci", "regressor column"},
        {"y_col", Kind::kString, "inventory_days", "response column"},
        {"id_col", Kind::kString, "country", "identifier column"}}},
  };
}

std::string flag_name(const std::string& key) {
  std::string out = key;
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw FlagError(fmt::format("{}: '{}' is not a finite number", what, text));
  }
  return v;
}

template <typename Int>
Int parse_integer(const std::string& text, const std::string& what) {
  Int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FlagError(fmt::format("{}: '{}' is not an integer", what, text));
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<double> expand_grid(const std::string& text, const std::string& what) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw FlagError(fmt::format("{}: expected lo:hi:count, got '{}'", what, text));
  const double lo = parse_real(parts[0], what);
  const double hi = parse_real(parts[1], what);
  const int count = parse_integer<int>(parts[2], what);
  if (count < 1) throw FlagError(fmt::format("{}: count must be >= 1", what));
  if (hi < lo) throw FlagError(fmt::format("{}: hi must be >= lo", what));
  if (count == 1 && hi != lo) throw FlagError(fmt::format("{}: a single point needs lo == hi", what));
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  if (count > 1) grid.back() = hi;
  return grid;
}

// Text from a flag, converted to the JSON value stored in the resolved config.
json value_from_flag(const OptionSpec& spec, const std::string& text) {
  const std::string what = "--" + flag_name(spec.key);
  switch (spec.kind) {
    case Kind::kReal:
      return parse_real(text, what);
    case Kind::kInt:
      return parse_integer<long long>(text, what);
    case Kind::kSeed:
      return parse_integer<std::uint64_t>(text, what);
    case Kind::kString:
      return text;
    case Kind::kGrid:
      expand_grid(text, what);
      return text;
    case Kind::kRealList: {
      json arr = json::array();
      for (const auto& item : split(text, ',')) arr.push_back(parse_real(item, what));
      return arr;
    }
  }
  return nullptr;
}

// Rejects config-file values of the wrong JSON type.
void check_type(const OptionSpec& spec, const json& v) {
  bool ok = false;
  switch (spec.kind) {
    case Kind::kReal:
      ok = v.is_number();
      break;
    case Kind::kInt:
      ok = v.is_number_integer();
      break;
    case Kind::kSeed:
      ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
      break;
    case Kind::kString:
      ok = v.is_string();
      break;
    case Kind::kGrid:
      ok = v.is_string();
      if (ok) expand_grid(v.get<std::string>(), spec.key);
      break;
    case Kind::kRealList:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
      break;
  }
  if (!ok) throw FlagError(fmt::format("config key '{}' has the wrong type", spec.key));
}

// Accepts either a bare {key: value} object or a manifest with "command" and "config".
json load_config_file(const std::string& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FlagError(fmt::format("config file {}: {}", path, e.what()));
  }
  if (!doc.is_object()) throw FlagError("config file must hold a JSON object");
  if (doc.contains("config")) {
    if (doc.contains("command") && doc["command"] != command) {
      throw FlagError(fmt::format("config file was written by '{}', not '{}'",
                                  doc["command"].get<std::string>(), command));
    }
    doc = doc["config"];
    if (!doc.is_object()) throw FlagError("config file: 'config' must be an object");
  }
  return doc;
}

struct Invocation {
  const CommandSpec* spec = nullptr;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> flag_text;
  std::map<std::string, CLI::Option*> flag_opts;
};

json resolve(const Invocation& inv, const std::string& config_path) {
  json file_cfg = json::object();
  if (!config_path.empty()) file_cfg = load_config_file(config_path, inv.spec->name);
  for (const auto& [key, value] : file_cfg.items()) {
    const bool known = std::any_of(inv.spec->options.begin(), inv.spec->options.end(),
                                   [&](const OptionSpec& o) { return o.key == key; });
    if (!known) throw FlagError(fmt::format("config key '{}' is not used by '{}'", key, inv.spec->name));
  }
  json resolved = json::object();
  for (const auto& opt : inv.spec->options) {
    if (inv.flag_opts.at(opt.key)->count() > 0) {
      resolved[opt.key] = value_from_flag(opt, inv.flag_text.at(opt.key));
    } else if (file_cfg.contains(opt.key)) {
      check_type(opt, file_cfg[opt.key]);
      resolved[opt.key] = file_cfg[opt.key];
    } else if (!opt.fallback.is_null()) {
      resolved[opt.key] = opt.fallback;
    } else if (opt.key != "transient") {
      throw FlagError(fmt::format("--{} is required", flag_name(opt.key)));
    }
  }
  return resolved;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

// Outputs are assembled in memory and written in a fixed order.
class OutputSet {
 public:
  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void write(const fs::path& dir, const std::string& command, const json& config) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["files"] = json::array();
    for (const auto& [name, content] : files_) {
      write_file(dir / name, content);
      manifest["files"].push_back({{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }

  std::size_t size() const { return files_.size() + 1; }

 private:
  static void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw IoError("cannot write " + path.string());
  }

  std::vector<std::pair<std::string, std::string>> files_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

ModelParams model_params(const json& cfg, double alpha_fallback = 0.0) {
  const double alpha = cfg.contains("alpha") ? cfg["alpha"].get<double>() : alpha_fallback;
  try {
    return ModelParams(alpha, cfg["beta"].get<double>(), cfg["eps"].get<double>());
  } catch (const std::invalid_argument& e) {
    throw FlagError(e.what());
  }
}

int positive_int(const json& cfg, const std::string& key, int min = 1) {
  const long long v = cfg[key].get<long long>();
  if (v < min || v > std::numeric_limits<int>::max()) {
    throw FlagError(fmt::format("--{} must be >= {}", flag_name(key), min));
  }
  return static_cast<int>(v);
}

Probability probability(const json& cfg, const std::string& key) {
  const double v = cfg[key].get<double>();
  if (!(v >= 0.0 && v <= 1.0)) throw FlagError(fmt::format("--{} must lie in [0, 1]", flag_name(key)));
  return Probability(v);
}

Policy parse_policy(const std::string& text, double commitment) {
  if (text == "best-response") {
    if (commitment < 0.0) throw FlagError("--commit-t must be >= 0");
    return BestResponsePolicy{commitment};
  }
  if (text.rfind("overshoot:", 0) == 0) {
    const int s = parse_integer<int>(text.substr(10), "--policy");
    if (s < 0) throw FlagError("--policy overshoot:S needs S >= 0");
    return OvershootPolicy{s};
  }
  if (text.rfind("fixed:", 0) == 0) {
    const auto parts = split(text.substr(6), ',');
    if (parts.size() != 2) throw FlagError("--policy fixed:M,TAU");
    const Strategy s{parse_integer<int>(parts[0], "--policy"), parse_integer<int>(parts[1], "--policy")};
    if (s.m < 0 || s.tau < 0 || s.tau > s.m) throw FlagError("--policy fixed:M,TAU needs 0 <= TAU <= M");
    return FixedPolicy{s};
  }
  throw FlagError(fmt::format("--policy: unknown policy '{}'", text));
}

OutputSet portrait_outputs(const json& cfg, int overshoot) {
  const auto params = model_params(cfg);
  const int resolution = positive_int(cfg, "resolution", 100);
  if (overshoot < 0) throw FlagError("--s must be >= 0");
  const auto portrait = phase_portrait(params, resolution, overshoot);
  const auto basin = trap_basin(params, resolution, overshoot);
  std::ostringstream csv;
  write_portrait_csv(csv, portrait);
  json summary;
  summary["trap_basin"] = basin.f_star.value();
  summary["breakpoints"] = to_json(analytic_breakpoints(params));
  OutputSet out;
  out.add("portrait.csv", csv.str());
  out.add("summary.json", dump(summary));
  return out;
}

OutputSet cmd_portrait(const json& cfg, int) { return portrait_outputs(cfg, 0); }

OutputSet cmd_overshoot(const json& cfg, int) {
  return portrait_outputs(cfg, static_cast<int>(cfg["s"].get<long long>()));
}

OutputSet cmd_trajectory(const json& cfg, int) {
  const auto params = model_params(cfg);
  const auto f0 = probability(cfg, "f0");
  const double t_end = cfg["t_end"].get<double>();
  const double dt = cfg["dt"].get<double>();
  if (!(dt > 0.0) || !(t_end >= dt)) throw FlagError("need 0 < --dt <= --t-end");
  const auto policy = parse_policy(cfg["policy"].get<std::string>(), cfg["commit_t"].get<double>());
  const int stride = positive_int(cfg, "stride");
  const double transient = cfg.contains("transient") ? cfg["transient"].get<double>() : t_end / 2;

  const auto traj = integrate(params, f0, policy, t_end, dt);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj, static_cast<std::size_t>(stride));

  std::ostringstream switches;
  switches << "t,f,old_m,old_tau,new_m,new_tau\n";
  for (const auto& e : traj.switch_events) {
    switches << format_real(e.time) << ',' << format_real(e.f) << ',' << e.old_strategy.m << ','
             << e.old_strategy.tau << ',' << e.new_strategy.m << ',' << e.new_strategy.tau << '\n';
  }

  json cycle;
  try {
    cycle = to_json(detect_cycle(traj, transient));
  } catch (const InsufficientDataError& e) {
    cycle = {{"detected", false}, {"error", e.what()}};
  }
  OutputSet out;
  out.add("trajectory.csv", csv.str());
  out.add("switches.csv", switches.str());
  out.add("cycle.json", dump(cycle));
  return out;
}

OutputSet cmd_diagram(const json& cfg, int threads) {
  const auto alphas = expand_grid(cfg["alpha_grid"].get<std::string>(), "--alpha-grid");
  const auto fs_grid = expand_grid(cfg["f_grid"].get<std::string>(), "--f-grid");
  model_params(cfg, alphas.front());
  for (double a : alphas) {
    if (!(a > 0.0)) throw FlagError("--alpha-grid values must be > 0");
  }
  if (fs_grid.front() < 0.0 || fs_grid.back() > 1.0) throw FlagError("--f-grid must lie in [0, 1]");
  const auto cells = phase_diagram(cfg["beta"].get<double>(), cfg["eps"].get<double>(), alphas, fs_grid, threads);
  std::ostringstream csv;
  write_diagram_csv(csv, cells);
  OutputSet out;
  out.add("diagram.csv", csv.str());
  return out;
}

OutputSet cmd_sweep(const json& cfg, int threads) {
  const double alpha = cfg["alpha"].get<double>();
  const double eps = cfg["eps"].get<double>();
  const auto betas = cfg["betas"].get<std::vector<double>>();
  if (betas.empty()) throw FlagError("--betas must not be empty");
  for (double b : betas) {
    try {
      ModelParams(alpha, b, eps);
    } catch (const std::invalid_argument& e) {
      throw FlagError(e.what());
    }
  }
  const auto grid = expand_grid(cfg["f_grid"].get<std::string>(), "--f-grid");
  if (grid.front() < 0.0 || grid.back() > 1.0) throw FlagError("--f-grid must lie in [0, 1]");

  const auto points = redundancy_sweep(alpha, eps, betas, grid, threads);
  std::ostringstream csv;
  write_sweep_csv(csv, points);

  // Buffer against threshold, one quadratic fit per beta.
  json fits = json::array();
  for (double b : betas) {
    std::vector<double> x, y;
    for (const auto& p : points) {
      if (p.beta == b) {
        x.push_back(p.tau_star);
        y.push_back(p.buffer);
      }
    }
    json entry{{"beta", b}};
    try {
      const auto report = inverted_u_report(x, y);
      entry["fit"] = to_json(report.fit);
      entry["is_inverted_u"] = report.is_inverted_u;
    } catch (const std::exception& e) {
      entry["fit"] = nullptr;
      entry["error"] = e.what();
    }
    fits.push_back(entry);
  }
  OutputSet out;
  out.add("sweep.csv", csv.str());
  out.add("fits.json", dump(fits));
  return out;
}

OutputSet cmd_abm(const json& cfg, int threads) {
  AbmConfig c;
  c.n_agents = positive_int(cfg, "n", 2);
  c.params = model_params(cfg);
  c.r = cfg["r"].get<double>();
  c.xi = cfg["xi"].get<double>();
  c.f0 = probability(cfg, "f0");
  c.t_end = cfg["t_end"].get<double>();
  c.sample_dt = cfg["sample_dt"].get<double>();
  c.seed = cfg["seed"].get<std::uint64_t>();
  const int replicas = positive_int(cfg, "replicas", 2);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FlagError(e.what());
  }
  const auto summary = run_replicas(c, replicas, threads);
  std::ostringstream series, finals;
  write_ensemble_csv(series, summary);
  write_finals_csv(finals, summary);
  OutputSet out;
  out.add("ensemble.csv", series.str());
  out.add("finals.csv", finals.str());
  return out;
}

OutputSet cmd_fit(const json& cfg, int) {
  CountryColumns cols;
  cols.id = cfg["id_col"].get<std::string>();
  cols.eci = cfg["x_col"].get<std::string>();
  cols.inventory = cfg["y_col"].get<std::string>();
  const auto data = load_country_csv(cfg["input"].get<std::string>(), cols);
  FitResult fit;
  try {
    fit = inverted_u_report(data.records).fit;
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  OutputSet out;
  out.add("fit.json", dump(to_json(fit, data.skipped_rows)));
  return out;
}

using CommandFn = OutputSet (*)(const json&, int);

CommandFn command_fn(const std::string& name) {
  static const std::map<std::string, CommandFn> table{
      {"portrait", cmd_portrait}, {"overshoot", cmd_overshoot}, {"trajectory", cmd_trajectory},
      {"diagram", cmd_diagram},   {"sweep", cmd_sweep},         {"abm", cmd_abm},
      {"fit", cmd_fit}};
  return table.at(name);
}

int env_threads() {
  const char* env = std::getenv("CTRAP_THREADS");
  if (env && *env) {
    const int n = parse_integer<int>(env, "CTRAP_THREADS");
    if (n < 1) throw FlagError("CTRAP_THREADS must be >= 1");
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contagious-disruption economy toolkit", "ctrap"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand help for every subcommand");

  const auto specs = command_specs();
  std::string config_path, out_dir;
  bool verbose = false;
  int threads_flag = 0;
  std::vector<Invocation> invocations(specs.size());

  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto& inv = invocations[i];
    inv.spec = &specs[i];
    inv.app = app.add_subcommand(specs[i].name, specs[i].description);
    inv.app->add_option("--config", config_path, "JSON config file (a manifest.json is accepted)");
    inv.app->add_option("--out-dir", out_dir, "output directory (env CTRAP_OUT_DIR, default .)");
    inv.app->add_option("--threads", threads_flag, "worker threads (env CTRAP_THREADS)")->check(CLI::PositiveNumber);
    inv.app->add_flag("--verbose", verbose, "print one progress line on stdout");
    for (const auto& opt : specs[i].options) {
      std::string help = opt.help;
      if (!opt.fallback.is_null()) {
        help += " [default " + (opt.fallback.is_string() ? opt.fallback.get<std::string>() : opt.fallback.dump()) + "]";
      }
      inv.flag_opts[opt.key] = inv.app->add_option("--" + flag_name(opt.key), inv.flag_text[opt.key], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitFlags;
  }

  const Invocation* inv = nullptr;
  for (const auto& candidate : invocations) {
    if (candidate.app->parsed()) inv = &candidate;
  }

  try {
    const json cfg = resolve(*inv, config_path);
    int threads = threads_flag > 0 ? threads_flag : env_threads();
    if (out_dir.empty()) {
      const char* env = std::getenv("CTRAP_OUT_DIR");
      out_dir = env && *env ? env : ".";
    }
    const auto outputs = command_fn(inv->spec->name)(cfg, threads);
    outputs.write(out_dir, inv->spec->name, cfg);
    if (verbose) std::cout << fmt::format("{}: wrote {} files to {}\n", inv->spec->name, outputs.size(), out_dir);
    return 0;
  } catch (const FlagError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << inv->app->help();
    return kExitFlags;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
