// correctorlab: synthesis, corrector solves, sensitivity checks, diagnostics and
// Monte Carlo campaigns from the command line.
//
// Exit codes: 0 success, 1 invalid input (or a failed check), 2 solver failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "correctorlab/corrector.hpp"
#include "correctorlab/ensemble.hpp"
#include "correctorlab/functionals.hpp"
#include "correctorlab/gaussfield.hpp"
#include "correctorlab/io.hpp"
#include "correctorlab/sensitivity.hpp"
#include "json.hpp"

using namespace correctorlab;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kInvalid = 1, kSolver = 2;

struct FieldArgs {
  int d = 2;
  int n = 64;
  double L = 0.0;
  double beta = 0.5;
  double amplitude = 1.0;
  double smoothing_scale = 0.0;
  std::string map = "scalar-isotropic";
  double lambda = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;
  double tolerance = 1e-10;

  Lattice lattice() const { return Lattice(d, n, L); }
  CovarianceSpec covariance() const { return {beta, amplitude, smoothing_scale}; }
  CoefficientMapSpec map_spec() const { return {map_variant_from_string(map), lambda}; }
  SolveOptions solve() const { return {tolerance, 0, lambda}; }
  FieldSeed field_seed() const { return {seed, sample}; }

  // Builds every derived object once so invalid input fails before any compute.
  void validate() const {
    const auto lat = lattice();
    CovarianceModel::from_spec(covariance(), lat);
    const auto m = map_spec();
    if (!(m.lambda > 0 && m.lambda < 1)) throw std::invalid_argument("lambda must lie in (0, 1)");
    solve().validate();
  }

  json to_json() const {
    return {{"d", d},       {"n", n},
            {"L", lattice().box_size()},
            {"beta", beta}, {"amplitude", amplitude},
            {"smoothing_scale", smoothing_scale},
            {"map", map},   {"lambda", lambda},
            {"seed", seed}, {"sample", sample},
            {"tolerance", tolerance}};
  }

  TensorField atilde() const { return synthesize_gaussian(covariance(), lattice(), field_seed()); }
};

void add_field_options(CLI::App* app, FieldArgs& f) {
  app->add_option("--d", f.d, "Dimension (1, 2 or 3)")->capture_default_str();
  app->add_option("--n", f.n, "Sites per axis (power of two >= 4)")->capture_default_str();
  app->add_option("--L", f.L, "Box size (<= 0: L = n)")->capture_default_str();
  app->add_option("--beta", f.beta, "Covariance decay exponent in (0, d)")->capture_default_str();
  app->add_option("--amplitude", f.amplitude, "Covariance amplitude")->capture_default_str();
  app->add_option("--smoothing-scale", f.smoothing_scale, "Infrared length (<= 0: L)")->capture_default_str();
  app->add_option("--map", f.map, "scalar-isotropic | eigenvalue-clamp")->capture_default_str();
  app->add_option("--lambda", f.lambda, "Ellipticity in (0, 1)")->capture_default_str();
  app->add_option("--seed", f.seed, "Base seed")->capture_default_str();
  app->add_option("--sample", f.sample, "Sample index")->capture_default_str();
  app->add_option("--tolerance", f.tolerance, "Relative solver tolerance")->capture_default_str();
}

void print_config(const json& config) {
  std::cout << "config: " << config.dump() << "\n";
  if (config.contains("seed")) std::cout << "seed: " << config.at("seed").dump() << "\n";
}

int resolve_workers(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("CORRECTORLAB_WORKERS"); env && *env) {
    try {
      std::size_t pos = 0;
      const int w = std::stoi(env, &pos);
      if (pos == std::string(env).size() && w > 0) return w;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("CORRECTORLAB_WORKERS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

int fail(bool as_json, int code, const std::string& kind, const std::string& message) {
  if (as_json)
    std::cerr << json{{"error", message}, {"kind", kind}, {"exit_code", code}}.dump() << "\n";
  else
    std::cerr << "error: " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correctors of random elliptic coefficient fields: synthesis, solves, diagnostics"};
  app.require_subcommand(1);
  app.allow_extras(false);
  app.fallthrough();

  bool as_json = false, dry_run = false;
  int workers_flag = 0;
  app.add_flag("--json", as_json, "Machine-readable errors on standard error");
  app.add_flag("--dry-run", dry_run, "Validate and print the configuration without computing");
  app.add_option("--workers", workers_flag, "Worker threads (fallback: CORRECTORLAB_WORKERS, then 1)")
      ->check(CLI::PositiveNumber);

  // synth
  FieldArgs synth_f;
  std::string synth_out;
  bool synth_mapped = false;
  auto* synth = app.add_subcommand("synth", "Sample a Gaussian tensor field and write it to disk");
  add_field_options(synth, synth_f);
  synth->add_option("--out", synth_out, "Output .bin path (sidecar: <out>.json)")->required();
  synth->add_flag("--mapped", synth_mapped, "Write the coefficient a = Phi(atilde) instead of atilde");

  // corrector
  FieldArgs corr_f;
  std::string corr_out, corr_fields;
  auto* corr = app.add_subcommand("corrector", "Solve for (phi, sigma) and the homogenized coefficient");
  add_field_options(corr, corr_f);
  corr->add_option("--out", corr_out, "Write the summary JSON here");
  corr->add_option("--fields", corr_fields, "Path prefix for phi_i / sigma field files");

  // sensitivity
  FieldArgs sens_f;
  sens_f.n = 16;
  bool sens_check = false, sens_scaling = false;
  int sens_trials = 10, sens_samples = 50, sens_i = 0, sens_j = 0, sens_k = 1;
  double sens_eps = 1e-4, sens_radius = 4.0;
  std::string sens_kind = "both", sens_csv;
  std::vector<double> sens_radii{4, 8, 16, 32};
  auto* sens = app.add_subcommand("sensitivity", "Derivative representations and their scaling");
  add_field_options(sens, sens_f);
  sens->add_flag("--check-representation", sens_check, "Compare against central differences");
  sens->add_flag("--scaling", sens_scaling, "Run the L^q scaling study");
  sens->add_option("--trials", sens_trials, "Random perturbation directions")->capture_default_str();
  sens->add_option("--eps", sens_eps, "Finest step (a 10x coarser step is also run)")->capture_default_str();
  sens->add_option("--kind", sens_kind, "phi | sigma | both")->capture_default_str();
  sens->add_option("--radius", sens_radius, "Functional radius")->capture_default_str();
  sens->add_option("--i", sens_i, "Corrector direction")->capture_default_str();
  sens->add_option("--j", sens_j, "sigma index j")->capture_default_str();
  sens->add_option("--k", sens_k, "sigma index k")->capture_default_str();
  sens->add_option("--samples", sens_samples, "Samples for the scaling study")->capture_default_str();
  sens->add_option("--radii", sens_radii, "Radii for the scaling study")->delimiter(',');
  sens->add_option("--csv", sens_csv, "Write scaling rows here");

  // mvcheck
  FieldArgs mv_f;
  MeanValueOptions mv_o;
  bool mv_no_coord = false;
  auto* mv = app.add_subcommand("mvcheck", "Mean-value diagnostic for a-harmonic functions");
  add_field_options(mv, mv_f);
  mv->add_option("--r", mv_o.r, "Smallest radius")->capture_default_str();
  mv->add_option("--R", mv_o.R, "Outer radius")->capture_default_str();
  mv->add_option("--trials", mv_o.random_trials, "Random boundary-data trials")->capture_default_str();
  mv->add_option("--boundary-modes", mv_o.boundary_modes, "Maximal wave number of boundary data")->capture_default_str();
  mv->add_option("--threshold", mv_o.smallness_threshold, "Smallness screen threshold")->capture_default_str();
  mv->add_flag("--no-coordinate", mv_no_coord, "Skip the x_i + phi_i trials");

  // ensemble
  std::string ens_config, ens_out = ".";
  std::vector<std::string> ens_set;
  auto* ens = app.add_subcommand("ensemble", "Run a Monte Carlo campaign");
  ens->add_option("--config", ens_config, "Config file (key = value lines)");
  ens->add_option("--set", ens_set, "Override a config key, key=value (repeatable)");
  std::map<std::string, std::string> ens_direct;
  for (const char* key : {"samples", "seed", "n", "d", "beta", "radii", "map", "lambda", "amplitude"}) {
    ens->add_option_function<std::string>(
        std::string("--") + key, [&ens_direct, key](const std::string& v) { ens_direct[key] = v; },
        std::string("Override config key '") + key + "'");
  }
  ens->add_option("--out", ens_out, "Output directory for records.jsonl")->capture_default_str();

  // report
  std::string rep_records, rep_out;
  auto* rep = app.add_subcommand("report", "Fit tables and plots from a records file");
  rep->add_option("--records", rep_records, "records.jsonl")->required();
  rep->add_option("--out", rep_out, "Output directory (default: next to the records)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(as_json, kInvalid, "validation", e.what());
  }

  try {
    const int workers = resolve_workers(workers_flag);

    if (*synth) {
      synth_f.validate();
      auto cfg = synth_f.to_json();
      cfg["mapped"] = synth_mapped;
      cfg["out"] = synth_out;
      print_config(cfg);
      if (dry_run) return kOk;
      auto field = synth_f.atilde();
      if (synth_mapped) field = apply_phi(field, synth_f.map_spec());
      io::write_field(synth_out, field, synth_f.seed, cfg.dump());
      std::cout << "wrote " << synth_out << " and " << io::sidecar_path(synth_out).string() << "\n";
      return kOk;
    }

    if (*corr) {
      corr_f.validate();
      const auto cfg = corr_f.to_json();
      print_config(cfg);
      if (dry_run) return kOk;
      const auto a = apply_phi(corr_f.atilde(), corr_f.map_spec());
      const auto set = build_correctors(a, corr_f.solve());
      auto summary = json::parse(io::corrector_summary_json(set));
      summary["config"] = cfg;
      std::cout << summary.dump() << "\n";
      if (!corr_out.empty()) {
        std::ofstream out(corr_out);
        if (!out) throw std::invalid_argument("cannot write " + corr_out);
        out << summary.dump(2) << "\n";
      }
      if (!corr_fields.empty()) {
        const int d = set.dim();
        for (int i = 0; i < d; ++i)
          io::write_field(corr_fields + "_phi" + std::to_string(i + 1) + ".bin", set.phi[i], corr_f.seed, cfg.dump());
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            for (int k = j + 1; k < d; ++k)
              io::write_field(corr_fields + "_sigma" + std::to_string(i + 1) + std::to_string(j + 1) +
                                  std::to_string(k + 1) + ".bin",
                              set.sigma[sigma_slot(d, i, j, k)], corr_f.seed, cfg.dump());
      }
      return kOk;
    }

    if (*sens) {
      sens_f.validate();
      if (sens_check == sens_scaling)
        throw std::invalid_argument("choose exactly one of --check-representation and --scaling");
      auto cfg = sens_f.to_json();
      if (sens_check) {
        if (sens_kind != "phi" && sens_kind != "sigma" && sens_kind != "both")
          throw std::invalid_argument("--kind must be phi, sigma or both");
        if (!(sens_eps > 0 && sens_eps < 0.1)) throw std::invalid_argument("--eps must lie in (0, 0.1)");
        if (sens_trials < 1) throw std::invalid_argument("--trials must be >= 1");
        const auto F = make_average_functional(sens_f.lattice(), sens_radius, 0);
        cfg.update({{"mode", "check-representation"}, {"trials", sens_trials}, {"eps", sens_eps},
                    {"kind", sens_kind}, {"radius", sens_radius}, {"i", sens_i}, {"j", sens_j}, {"k", sens_k}});
        print_config(cfg);
        if (dry_run) return kOk;
        const auto a = apply_phi(sens_f.atilde(), sens_f.map_spec());
        double worst = 0;
        for (const char* kind : {"phi", "sigma"}) {
          if (sens_kind != "both" && sens_kind != kind) continue;
          RepresentationCheckOptions o;
          o.kind = std::string(kind) == "phi" ? FunctionalKind::Phi : FunctionalKind::Sigma;
          o.i = sens_i, o.j = sens_j, o.k = sens_k;
          o.trials = sens_trials;
          o.eps = {10 * sens_eps, sens_eps};
          o.seed = sens_f.seed;
          o.solve.lambda = sens_f.lambda;
          const auto rc = check_representation(a, F, o);
          worst = std::max(worst, rc.max_error(1));
          std::cout << json{{"kind", kind},
                            {"eps", rc.eps},
                            {"max_rel_error", {rc.max_error(0), rc.max_error(1)}},
                            {"converging", rc.converging()}}
                           .dump()
                    << "\n";
        }
        std::cout << "max relative error: " << worst << (worst < 1e-4 ? " (pass)" : " (FAIL)") << "\n";
        return worst < 1e-4 ? kOk : kInvalid;
      }
      ScalingStudyConfig sc;
      sc.lattice = sens_f.lattice();
      sc.covariance = sens_f.covariance();
      sc.map = sens_f.map_spec();
      sc.sample_count = sens_samples;
      sc.base_seed = sens_f.seed;
      sc.radii = sens_radii;
      sc.workers = workers;
      sc.solve = sens_f.solve();
      cfg.update({{"mode", "scaling"}, {"samples", sens_samples}, {"radii", sens_radii}, {"workers", workers}});
      print_config(cfg);
      if (sens_samples < 1) throw std::invalid_argument("--samples must be >= 1");
      for (double r : sens_radii) {
        cube_side_sites(sc.lattice, r);
        if (r > sc.lattice.box_size() / 8) throw std::invalid_argument("scaling radii must be <= L/8");
      }
      if (dry_run) return kOk;
      const auto st = lq_scaling_study(sc);
      std::cout << json{{"q", st.exps.q},
                        {"radii", st.radii},
                        {"mean_norms", st.mean_norms},
                        {"slope", st.fit.slope},
                        {"slope_ci", {st.fit.slope_ci_low, st.fit.slope_ci_high}},
                        {"predicted", -sens_f.beta / 2}}
                       .dump()
                << "\n";
      if (!sens_csv.empty()) {
        std::ofstream out(sens_csv);
        if (!out) throw std::invalid_argument("cannot write " + sens_csv);
        out << "# config = " << cfg.dump() << "\n";
        write_scaling_csv(st, out);
      }
      return kOk;
    }

    if (*mv) {
      mv_f.validate();
      mv_o.corrected_coordinates = !mv_no_coord;
      mv_o.seed = mv_f.seed;
      mv_o.solve = mv_f.solve();
      auto cfg = mv_f.to_json();
      cfg.update({{"r", mv_o.r}, {"R", mv_o.R}, {"trials", mv_o.random_trials},
                  {"boundary_modes", mv_o.boundary_modes}, {"threshold", mv_o.smallness_threshold},
                  {"coordinate_trials", mv_o.corrected_coordinates}});
      print_config(cfg);
      const auto lat = mv_f.lattice();
      cube_side_sites(lat, mv_o.r);
      cube_side_sites(lat, mv_o.R);
      if (mv_o.r > mv_o.R || mv_o.R > lat.box_size() / 4)
        throw std::invalid_argument("need r <= R <= L/4");
      if (dry_run) return kOk;
      const auto a = apply_phi(mv_f.atilde(), mv_f.map_spec());
      const auto set = build_correctors(a, mv_o.solve);
      const auto r = mean_value_check(a, set, mv_o);
      std::cout << json{{"kinds", r.kinds},
                        {"ratios", r.ratios},
                        {"reverse_holder", r.reverse_holder},
                        {"max_ratio", r.max_ratio},
                        {"smallness", r.smallness},
                        {"passes_screen", r.passes_screen}}
                       .dump()
                << "\n";
      return kOk;
    }

    if (*ens) {
      EnsembleConfig cfg = ens_config.empty() ? EnsembleConfig{} : load_config(ens_config);
      for (const auto& [k, v] : ens_direct) cfg.set(k, v);
      for (const auto& kv : ens_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      cfg.validate();
      auto shown = json::parse(cfg.to_json());
      shown["workers"] = workers;
      print_config(shown);
      if (dry_run) return kOk;
      std::filesystem::create_directories(ens_out);
      const auto path = std::filesystem::path(ens_out) / "records.jsonl";
      std::ofstream out(path);
      if (!out) throw std::invalid_argument("cannot write " + path.string());
      const auto recs = run_ensemble(cfg, workers, &out);
      std::size_t failed = 0;
      for (const auto& r : recs) failed += !r.ok;
      std::cout << "wrote " << recs.size() << " records (" << failed << " solver failures) to " << path.string() << "\n";
      return kOk;
    }

    if (*rep) {
      std::ifstream in(rep_records);
      if (!in) throw std::invalid_argument("cannot open " + rep_records);
      EnsembleConfig cfg;
      cfg.n = 0;
      const auto recs = read_records(in, &cfg);
      if (cfg.n == 0) throw std::invalid_argument("records file carries no configuration line");
      print_config(json::parse(cfg.to_json()));
      if (recs.empty()) throw std::invalid_argument("records file holds no samples");
      if (dry_run) return kOk;
      const auto dir = rep_out.empty() ? std::filesystem::path(rep_records).parent_path() : std::filesystem::path(rep_out);
      const auto r = write_report(recs, cfg, dir.empty() ? "." : dir);
      json summary{{"samples", recs.size()}, {"failures", r.failures}};
      if (r.has_variance)
        summary["variance_slope"] = {r.variance.fit.slope, r.variance.fit.slope_ci_low, r.variance.fit.slope_ci_high};
      if (r.tail.fit.count) summary["tail_fit"] = {{"slope", r.tail.fit.slope}, {"r_squared", r.tail.fit.r_squared}};
      if (r.has_rstar) summary["rstar_fit_slope"] = r.rstar.fit.slope;
      if (r.has_stationarity) summary["stationarity_flagged"] = r.stationarity.flagged;
      std::cout << summary.dump() << "\n";
      return kOk;
    }
  } catch (const SolverError& e) {
    return fail(as_json, kSolver, "solver", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(as_json, kInvalid, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(as_json, kInvalid, "error", e.what());
  }
  return kOk;
}
