#pragma once

// Command implementations behind the grl executable. Each command returns
// its rendered output and exit code; tools/grl_cli.cpp only parses flags.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "grl/distribution.hpp"
#include "grl/estimators.hpp"
#include "grl/gof.hpp"
#include "grl/parallel.hpp"
#include "grl/simstudy.hpp"

namespace grl::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kPartialConvergence = 2 };

// Bad input of any kind: unreadable file, parse failure, invalid option.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw InputError("unknown format '" + s + "' (expected csv or json)");
}

// ---------------------------------------------------------------- data files

/// Positive reals separated by whitespace or commas; '#' starts a comment
/// that runs to the end of the line.
inline std::vector<double> parse_data(std::istream& in, const std::string& name) {
  std::vector<double> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t' || c == '\r') c = ' ';
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw InputError(name + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
      }
      if (!std::isfinite(v) || !(v > 0)) {
        throw InputError(name + ":" + std::to_string(lineno) + ": value must be finite and > 0: '" + tok + "'");
      }
      out.push_back(v);
    }
  }
  return out;
}

inline Sample load_sample(const std::string& path, std::size_t min_n = 1) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  auto values = parse_data(in, path);
  if (values.empty()) throw InputError(path + ": no observations");
  if (values.size() < min_n) {
    throw InputError(path + ": need at least " + std::to_string(min_n) + " observations, got " +
                     std::to_string(values.size()));
  }
  return Sample(std::move(values));
}

// ------------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;

struct Table {
  std::string schema;  // e.g. "grl.fit"
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string cell_text(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return v; }
  } vis;
  return std::visit(vis, c);
}

inline nlohmann::json cell_json(const Cell& c) {
  struct {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(double v) const {
      return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_double(v));
    }
    nlohmann::json operator()(std::int64_t v) const { return v; }
    nlohmann::json operator()(bool v) const { return v; }
    nlohmann::json operator()(const std::string& v) const { return v; }
  } vis;
  return std::visit(vis, c);
}

/// "# schema: NAME/VERSION", a header line, then one line per row.
inline std::string render_csv(const Table& t) {
  std::string out = "# schema: " + t.schema + "/" + std::to_string(t.version) + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + cell_text(r[i]);
    out += "\n";
  }
  return out;
}

inline nlohmann::json table_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json o = nlohmann::json::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = cell_json(r[i]);
    rows.push_back(std::move(o));
  }
  return {{"schema", t.schema}, {"version", t.version}, {"columns", t.columns}, {"rows", rows}};
}

/// Several tables: CSV sections separated by a blank line, or a JSON
/// object keyed by schema name.
inline std::string render(const std::vector<Table>& tables, Format f) {
  if (f == Format::csv) {
    std::string out;
    for (std::size_t i = 0; i < tables.size(); ++i) out += (i ? "\n" : "") + render_csv(tables[i]);
    return out;
  }
  if (tables.size() == 1) return table_json(tables[0]).dump(2) + "\n";
  nlohmann::json o = nlohmann::json::object();
  for (const auto& t : tables) o[t.schema] = table_json(t);
  return o.dump(2) + "\n";
}

// Parsed CSV section as strings; enough to read back our own output.
struct CsvSection {
  std::string schema;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<CsvSection> parse_csv(const std::string& text) {
  std::vector<CsvSection> out;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = s.find(',', start);
      f.push_back(s.substr(start, comma - start));
      if (comma == std::string::npos) return f;
      start = comma + 1;
    }
  };
  bool want_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# schema: ", 0) == 0) {
      out.push_back({line.substr(10), {}, {}});
      want_header = true;
    } else if (out.empty()) {
      throw InputError("csv: missing schema line");
    } else if (want_header) {
      out.back().columns = split(line);
      want_header = false;
    } else {
      out.back().rows.push_back(split(line));
    }
  }
  return out;
}

// ------------------------------------------------------------------ output

struct Outcome {
  int exit_code = kOk;
  std::string text;
};

/// Writes to `path`, or stdout when empty. The file is written in one go
/// after all computation, so failed commands leave nothing behind.
inline void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

// -------------------------------------------------------------------- config

// Shared options; optional fields fall back to per-command defaults.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  Format format = Format::csv;
  std::string out;
  std::string ranks_out;
  unsigned threads = default_threads();
  std::vector<Method> methods;
  int bootstrap = 0;
  bool modified = false;
  EstimateOptions estimate;
  // simulate
  std::vector<GrlParams> thetas = default_theta_grid();
  std::vector<std::size_t> sample_sizes = SimConfig{}.sample_sizes;
  std::size_t replicates = SimConfig{}.replicates;
  bool start_at_truth = false;

  void validate() const {
    if (threads < 1) throw InputError("threads must be >= 1");
    if (bootstrap < 0) throw InputError("bootstrap must be >= 0");
    if (estimate.max_iterations < 1) throw InputError("max_iterations must be >= 1");
    if (!(estimate.tolerance > 0) || !(estimate.f_tolerance > 0)) throw InputError("tolerances must be > 0");
    if (estimate.starts < 1) throw InputError("starts must be >= 1");
    if (estimate.fixed_alpha && !(*estimate.fixed_alpha > 0)) throw InputError("fixed_alpha must be > 0");
    if (thetas.empty()) throw InputError("thetas must not be empty");
    if (replicates < 1) throw InputError("replicates must be >= 1");
    if (sample_sizes.empty()) throw InputError("sample_sizes must not be empty");
    for (auto n : sample_sizes) {
      if (n < 3) throw InputError("sample sizes must be >= 3");
    }
  }
};

inline std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.insert(out.end(), kAllMethods.begin(), kAllMethods.end());
      continue;
    }
    try {
      out.push_back(parse_method(n));
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  return out;
}

/// Applies a JSON config object to `cfg`. Unknown keys are rejected.
inline void apply_config(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("config: top level must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "format") cfg.format = parse_format(v.get<std::string>());
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "ranks_out") cfg.ranks_out = v.get<std::string>();
      else if (key == "threads") cfg.threads = v.get<unsigned>();
      else if (key == "methods") cfg.methods = parse_methods(v.get<std::vector<std::string>>());
      else if (key == "bootstrap") cfg.bootstrap = v.get<int>();
      else if (key == "modified") cfg.modified = v.get<bool>();
      else if (key == "max_iterations") cfg.estimate.max_iterations = v.get<int>();
      else if (key == "tolerance") cfg.estimate.tolerance = v.get<double>();
      else if (key == "f_tolerance") cfg.estimate.f_tolerance = v.get<double>();
      else if (key == "starts") cfg.estimate.starts = v.get<int>();
      else if (key == "fixed_alpha") cfg.estimate.fixed_alpha = v.get<double>();
      else if (key == "start_at_truth") cfg.start_at_truth = v.get<bool>();
      else if (key == "replicates") cfg.replicates = v.get<std::size_t>();
      else if (key == "sample_sizes") cfg.sample_sizes = v.get<std::vector<std::size_t>>();
      else if (key == "thetas") {
        cfg.thetas.clear();
        for (const auto& t : v) {
          if (!t.is_array() || t.size() != 2) throw InputError("config: each theta is [lambda, alpha]");
          cfg.thetas.emplace_back(t[0].get<double>(), t[1].get<double>());
        }
      } else {
        throw InputError("config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

inline void load_config(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  apply_config(cfg, j);
}

// ------------------------------------------------------------------ commands

namespace detail {
inline Cell opt_cell(const std::optional<double>& v) {
  return v ? Cell(*v) : Cell(std::monostate{});
}
}  // namespace detail

/// Fit every requested method and report the estimates with goodness of fit
/// at each. Exit 2 when any fit did not converge.
inline Outcome cmd_fit(const Sample& s, const RunConfig& cfg) {
  cfg.validate();
  const auto methods = cfg.methods.empty() ? std::vector<Method>(kAllMethods.begin(), kAllMethods.end())
                                           : cfg.methods;
  const std::uint64_t seed = cfg.seed.value_or(0);
  Table t{"grl.fit", 1,
          {"method", "lambda", "alpha", "objective", "neg_loglik", "cvm_w", "ad_a", "cvm_star", "ad_star", "ks",
           "ks_pvalue", "bootstrap_failures", "se_lambda", "se_alpha", "converged", "iterations", "at_boundary"},
          {}};
  bool all_converged = true;
  for (Method m : methods) {
    EstimateOptions eo = cfg.estimate;
    eo.seed = derive_seed(seed, {0xF17u, std::uint64_t(m)});
    EstimationResult r = [&] {
      try {
        return estimate(m, s, eo);
      } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
      }
    }();
    all_converged = all_converged && r.converged;
    GofOptions go;
    go.modified = cfg.modified;
    go.bootstrap = cfg.bootstrap;
    go.seed = derive_seed(seed, {0xB007u, std::uint64_t(m)});
    go.method = m;
    go.estimate = cfg.estimate;
    go.threads = cfg.threads;
    const GofReport g = gof_report(r.params, s, go);
    std::optional<double> sel, sea;
    if (r.std_errors) {
      sel = r.std_errors->se_lambda;
      sea = r.std_errors->se_alpha;
    }
    t.rows.push_back({std::string(to_string(m)), r.params.lambda(), r.params.alpha(), r.objective, g.neg_loglik,
                      g.cvm_w, g.ad_a, g.cvm_star, g.ad_star, g.ks, detail::opt_cell(g.ks_pvalue),
                      cfg.bootstrap > 0 ? Cell(std::int64_t(g.bootstrap_failures)) : Cell(std::monostate{}),
                      detail::opt_cell(sel), detail::opt_cell(sea), r.converged, std::int64_t(r.iterations),
                      r.at_boundary});
  }
  return {all_converged ? kOk : kPartialConvergence, render({t}, cfg.format)};
}

/// Goodness of fit at fixed parameters, or at the fit by `method`.
inline Outcome cmd_gof(const Sample& s, const RunConfig& cfg, std::optional<GrlParams> fixed,
                       std::optional<Method> method) {
  cfg.validate();
  if (fixed.has_value() == method.has_value()) {
    throw InputError("gof needs either --method or both --lambda and --alpha");
  }
  const std::uint64_t seed = cfg.seed.value_or(0);
  GrlParams p = fixed.value_or(GrlParams(3, 1));
  bool converged = true;
  Method refit = method.value_or(Method::MLE);
  if (method) {
    EstimateOptions eo = cfg.estimate;
    eo.seed = derive_seed(seed, {0xF17u, std::uint64_t(*method)});
    try {
      const auto r = estimate(*method, s, eo);
      p = r.params;
      converged = r.converged;
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  GofOptions go;
  go.modified = cfg.modified;
  go.bootstrap = cfg.bootstrap;
  go.seed = derive_seed(seed, {0xB007u, std::uint64_t(refit)});
  go.method = refit;
  go.estimate = cfg.estimate;
  go.threads = cfg.threads;
  const GofReport g = gof_report(p, s, go);

  Table t{"grl.gof", 1,
          {"source", "lambda", "alpha", "n", "neg_loglik", "cvm_w", "ad_a", "cvm_star", "ad_star", "ks", "modified",
           "bootstrap", "bootstrap_failures", "converged"},
          {}};
  std::vector<Cell> row{method ? std::string(to_string(*method)) : std::string("fixed"), p.lambda(), p.alpha(),
                        std::int64_t(s.size()), g.neg_loglik, g.cvm_w, g.ad_a, g.cvm_star, g.ad_star, g.ks,
                        g.modified, std::int64_t(cfg.bootstrap),
                        cfg.bootstrap > 0 ? Cell(std::int64_t(g.bootstrap_failures)) : Cell(std::monostate{}),
                        converged};
  // The p-value column appears only when a bootstrap ran.
  if (g.ks_pvalue) {
    t.columns.insert(t.columns.begin() + 10, "ks_pvalue");
    row.insert(row.begin() + 10, *g.ks_pvalue);
  }
  t.rows.push_back(std::move(row));
  return {converged ? kOk : kPartialConvergence, render({t}, cfg.format)};
}

inline SimConfig sim_config(const RunConfig& cfg) {
  SimConfig sc;
  sc.thetas = cfg.thetas;
  sc.sample_sizes = cfg.sample_sizes;
  sc.replicates = cfg.replicates;
  if (!cfg.methods.empty()) sc.methods = cfg.methods;
  if (cfg.seed) sc.master_seed = *cfg.seed;
  sc.estimate = cfg.estimate;
  sc.threads = cfg.threads;
  sc.start_at_truth = cfg.start_at_truth;
  return sc;
}

struct SimOutcome {
  int exit_code = kOk;
  std::string cells;
  std::string ranks;  // empty when appended to `cells`
};

/// Runs the Monte Carlo study. Per-cell error table plus the rank table;
/// the rank table goes to its own text when `separate_ranks` is set.
inline SimOutcome cmd_simulate(const RunConfig& cfg, bool separate_ranks = false) {
  cfg.validate();
  const SimConfig sc = sim_config(cfg);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const SimReport rep = run_study(sc);

  Table cells{"grl.sim.cells", 1,
              {"theta", "lambda", "alpha", "n", "method", "abs_bias_lambda", "abs_bias_alpha", "mse_lambda",
               "mse_alpha", "mre_lambda", "mre_alpha", "se_mse_lambda", "se_mse_alpha", "se_mre_lambda",
               "se_mre_alpha", "replicates_used", "failures"},
              {}};
  bool any_failure = false;
  for (const auto& c : rep.cells) {
    for (const auto& st : c.stats) {
      any_failure = any_failure || st.failures > 0;
      cells.rows.push_back({std::int64_t(c.theta_index + 1), c.theta.lambda(), c.theta.alpha(), std::int64_t(c.n),
                            std::string(to_string(st.method)), st.abs_bias_lambda, st.abs_bias_alpha, st.mse_lambda,
                            st.mse_alpha, st.mre_lambda, st.mre_alpha, st.se_mse_lambda, st.se_mse_alpha,
                            st.se_mre_lambda, st.se_mre_alpha, std::int64_t(st.replicates_used),
                            std::int64_t(st.failures)});
    }
  }

  static constexpr const char* kRowNames[6] = {"abs_bias_lambda", "abs_bias_alpha", "mse_lambda",
                                               "mse_alpha",       "mre_lambda",     "mre_alpha"};
  Table ranks{"grl.sim.ranks", 1, {"theta", "n", "row"}, {}};
  for (Method m : rep.ranks.methods) ranks.columns.emplace_back(to_string(m));
  for (const auto& b : rep.ranks.blocks) {
    for (std::size_t r = 0; r < b.row_ranks.size(); ++r) {
      std::vector<Cell> row{std::int64_t(b.theta_index + 1), std::int64_t(b.n), std::string(kRowNames[r])};
      for (double v : b.row_ranks[r]) row.emplace_back(v);
      ranks.rows.push_back(std::move(row));
    }
    std::vector<Cell> sums{std::int64_t(b.theta_index + 1), std::int64_t(b.n), std::string("rank_sum")};
    for (double v : b.rank_sums) sums.emplace_back(v);
    ranks.rows.push_back(std::move(sums));
    std::vector<Cell> br{std::int64_t(b.theta_index + 1), std::int64_t(b.n), std::string("block_rank")};
    for (double v : b.block_ranks) br.emplace_back(v);
    ranks.rows.push_back(std::move(br));
  }
  std::vector<Cell> tot{std::monostate{}, std::monostate{}, std::string("grand_total")};
  for (double v : rep.ranks.grand_totals) tot.emplace_back(v);
  ranks.rows.push_back(std::move(tot));
  std::vector<Cell> overall{std::monostate{}, std::monostate{}, std::string("overall_rank")};
  for (double v : rep.ranks.overall_ranks) overall.emplace_back(v);
  ranks.rows.push_back(std::move(overall));

  SimOutcome out;
  out.exit_code = any_failure ? kPartialConvergence : kOk;
  if (separate_ranks) {
    out.cells = render({cells}, cfg.format);
    out.ranks = render({ranks}, cfg.format);
  } else {
    out.cells = render({cells, ranks}, cfg.format);
  }
  return out;
}

struct GridSpec {
  double from = 0.01;
  double to = 10.0;
  std::size_t points = 200;
  bool log_scale = false;

  [[nodiscard]] std::vector<double> values() const {
    if (!(from >= 0) || !std::isfinite(to) || !(to > from)) throw InputError("grid: need 0 <= from < to");
    if (points < 2) throw InputError("grid: need at least 2 points");
    if (log_scale && !(from > 0)) throw InputError("grid: log scale needs from > 0");
    std::vector<double> t(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double w = double(i) / double(points - 1);
      t[i] = log_scale ? std::exp(std::log(from) + w * (std::log(to) - std::log(from))) : from + w * (to - from);
    }
    t.back() = to;
    return t;
  }
};

/// "FROM:TO:POINTS" with an optional ":log" or ":linear" suffix.
inline GridSpec parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::istringstream in(spec);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  if (parts.size() != 3 && parts.size() != 4) throw InputError("grid: expected FROM:TO:POINTS[:log|linear]");
  GridSpec g;
  try {
    std::size_t used = 0;
    g.from = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("from");
    g.to = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("to");
    const long long pts = std::stoll(parts[2], &used);
    if (used != parts[2].size() || pts < 2) throw std::invalid_argument("points");
    g.points = std::size_t(pts);
  } catch (const std::exception&) {
    throw InputError("grid: cannot parse '" + spec + "'");
  }
  if (parts.size() == 4) {
    if (parts[3] == "log") g.log_scale = true;
    else if (parts[3] != "linear") throw InputError("grid: scale must be log or linear");
  }
  (void)g.values();  // validate
  return g;
}

/// pdf, cdf, survival and hazard of the model on a grid.
inline Outcome cmd_curves(const GrlParams& p, const GridSpec& grid, Format f) {
  Table t{"grl.curves", 1, {"t", "pdf", "cdf", "survival", "hazard"}, {}};
  for (double x : grid.values()) {
    const double h = x > 0 ? hazard(p, x) : pdf(p, 0.0);  // S(0) = 1
    t.rows.push_back({x, pdf(p, x), cdf(p, x), survival(p, x), h});
  }
  return {kOk, render({t}, f)};
}

/// Scaled total-time-on-test curve of a data set, starting at (0, 0).
inline Outcome cmd_ttt(const Sample& s, Format f) {
  Table t{"grl.ttt", 1, {"u", "ttt"}, {}};
  t.rows.push_back({0.0, 0.0});
  for (const auto& pt : ttt_transform(s)) t.rows.push_back({pt.u, pt.value});
  return {kOk, render({t}, f)};
}

}  // namespace grl::cli
