#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grl/cli.hpp"

using namespace grl;
using namespace grl::cli;

namespace {

// Flags shared by every subcommand. Each can also come from GRL_<NAME>.
struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  std::string out;
  std::optional<unsigned> threads;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "master seed")->envname("GRL_SEED");
  sub->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->envname("GRL_FORMAT");
  sub->add_option("--out", c.out, "output path (default stdout)")->envname("GRL_OUT");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber)->envname("GRL_THREADS");
  sub->add_option("--config", c.config, "JSON config file; flags override it")->check(CLI::ExistingFile);
}

// Estimation flags; unset values keep the config or library defaults.
struct EstFlags {
  std::vector<std::string> methods;
  std::optional<int> bootstrap;
  std::optional<int> max_iterations;
  std::optional<double> tolerance;
  std::optional<int> starts;
  std::optional<double> fixed_alpha;
  bool modified = false;
};

void add_estimation(CLI::App* sub, EstFlags& e, bool with_methods) {
  if (with_methods) {
    sub->add_option("--methods", e.methods, "estimation methods (WLSE OLSE MLE MPSE CVME ADE RADE PCE, or all)")
        ->delimiter(',');
  }
  sub->add_option("--max-iterations", e.max_iterations, "simplex iteration cap per start");
  sub->add_option("--tolerance", e.tolerance, "simplex diameter tolerance");
  sub->add_option("--starts", e.starts, "number of optimizer starts");
  sub->add_option("--fixed-alpha", e.fixed_alpha, "hold alpha fixed (1 gives the one-parameter model)");
}

RunConfig make_config(const Common& c, const EstFlags& e) {
  RunConfig cfg;
  if (!c.config.empty()) load_config(cfg, c.config);
  if (c.seed) cfg.seed = c.seed;
  if (c.format) cfg.format = parse_format(*c.format);
  if (!c.out.empty()) cfg.out = c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (!e.methods.empty()) cfg.methods = parse_methods(e.methods);
  if (e.bootstrap) cfg.bootstrap = *e.bootstrap;
  if (e.max_iterations) cfg.estimate.max_iterations = *e.max_iterations;
  if (e.tolerance) cfg.estimate.tolerance = *e.tolerance;
  if (e.starts) cfg.estimate.starts = *e.starts;
  if (e.fixed_alpha) cfg.estimate.fixed_alpha = *e.fixed_alpha;
  if (e.modified) cfg.modified = true;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fitting, goodness of fit and simulation for the GRL lifetime distribution"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "grl 1.0.0");

  Common common;
  EstFlags est;

  // fit
  std::string data;
  auto* fit = app.add_subcommand("fit", "fit a data file by one or more methods");
  fit->add_option("data", data, "data file")->required();
  add_common(fit, common);
  add_estimation(fit, est, true);
  fit->add_option("--bootstrap", est.bootstrap, "bootstrap replicates for the KS p-value (0 = off)");
  fit->add_flag("--modified", est.modified, "small-sample factors on W and A");

  // gof
  std::string gof_method;
  std::optional<double> lambda, alpha;
  auto* gof = app.add_subcommand("gof", "goodness of fit at given parameters or at a fit");
  gof->add_option("data", data, "data file")->required();
  add_common(gof, common);
  add_estimation(gof, est, false);
  auto* gm = gof->add_option("--method", gof_method, "fit by this method first");
  auto* gl = gof->add_option("--lambda", lambda, "fixed lambda");
  auto* ga = gof->add_option("--alpha", alpha, "fixed alpha");
  gl->needs(ga);
  ga->needs(gl);
  gm->excludes(gl)->excludes(ga);
  gof->add_option("--bootstrap", est.bootstrap, "bootstrap replicates for the KS p-value (0 = off)");
  gof->add_flag("--modified", est.modified, "small-sample factors on W and A");

  // simulate
  std::optional<std::size_t> replicates;
  std::vector<std::size_t> sizes;
  std::string ranks_out;
  bool start_at_truth = false;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison of the estimators");
  add_common(sim, common);
  add_estimation(sim, est, true);
  sim->add_option("--replicates", replicates, "replicates per cell");
  sim->add_option("--sizes", sizes, "sample sizes")->delimiter(',');
  sim->add_flag("--start-at-truth", start_at_truth, "single local fit from the true parameters");
  sim->add_option("--ranks-out", ranks_out, "write the rank table here instead of after the cell table");

  // curves
  std::string grid = "0.01:10:200";
  std::string ttt_data;
  std::optional<double> clambda, calpha;
  auto* curves = app.add_subcommand("curves", "pdf, cdf, survival and hazard on a grid, or a TTT curve");
  add_common(curves, common);
  curves->add_option("--lambda", clambda, "lambda");
  curves->add_option("--alpha", calpha, "alpha");
  curves->add_option("--grid", grid, "FROM:TO:POINTS[:log|linear]");
  curves->add_option("--ttt", ttt_data, "emit the scaled TTT curve of this data file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    RunConfig cfg = make_config(common, est);
    if (*fit) {
      const Sample s = load_sample(data, 3);
      const Outcome o = cmd_fit(s, cfg);
      write_output(o.text, cfg.out);
      return o.exit_code;
    }
    if (*gof) {
      const Sample s = load_sample(data, 1);
      std::optional<GrlParams> fixed;
      std::optional<Method> method;
      if (lambda) {
        try {
          fixed = GrlParams(*lambda, *alpha);
        } catch (const DomainError& e) {
          throw InputError(e.what());
        }
      } else if (!gof_method.empty()) {
        method = parse_methods({gof_method}).at(0);
        if (s.size() < 3) throw InputError(data + ": need at least 3 observations to fit");
      }
      const Outcome o = cmd_gof(s, cfg, fixed, method);
      write_output(o.text, cfg.out);
      return o.exit_code;
    }
    if (*sim) {
      if (replicates) cfg.replicates = *replicates;
      if (!sizes.empty()) cfg.sample_sizes = sizes;
      if (!ranks_out.empty()) cfg.ranks_out = ranks_out;
      if (start_at_truth) cfg.start_at_truth = true;
      cfg.validate();
      const SimOutcome o = cmd_simulate(cfg, !cfg.ranks_out.empty());
      write_output(o.cells, cfg.out);
      if (!cfg.ranks_out.empty()) write_output(o.ranks, cfg.ranks_out);
      return o.exit_code;
    }
    if (*curves) {
      Outcome o;
      if (!ttt_data.empty()) {
        o = cmd_ttt(load_sample(ttt_data, 1), cfg.format);
      } else {
        if (!clambda || !calpha) throw InputError("curves needs --lambda and --alpha, or --ttt FILE");
        GrlParams p = [&] {
          try {
            return GrlParams(*clambda, *calpha);
          } catch (const DomainError& e) {
            throw InputError(e.what());
          }
        }();
        o = cmd_curves(p, parse_grid(grid), cfg.format);
      }
      write_output(o.text, cfg.out);
      return o.exit_code;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return kOk;
}
