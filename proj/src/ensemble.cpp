#include "correctorlab/ensemble.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "correctorlab/corrector.hpp"
#include "correctorlab/functionals.hpp"
#include "json.hpp"
#include "svgplot.hpp"

namespace correctorlab {

using nlohmann::json;

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw std::invalid_argument(key + ": not a number: '" + text + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw std::invalid_argument(key + ": not an integer: '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_double(key, item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + text + "'");
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "d",      "n",       "L",       "beta",      "amplitude", "smoothing_scale", "map",
      "lambda", "samples", "seed",    "radii",     "m_thresholds", "m_scale",      "windows",
      "rstar",  "rstar_beta", "tolerance", "max_iterations"};
  return keys;
}

std::vector<std::vector<double>> averages(const std::vector<VectorField>& grads, const Lattice& lat,
                                          const std::vector<double>& radii,
                                          std::array<long, 3> center) {
  std::vector<std::vector<double>> out;
  for (double r : radii) {
    const auto cube = centered_cube(lat, r, center);
    std::vector<double> row;
    for (const auto& g : grads)
      for (int c = 0; c < lat.dim(); ++c) row.push_back(cube_average(g.component(c), lat, cube));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> primary_values(const std::vector<SampleRecord>& records, int window,
                                   std::size_t ri) {
  std::vector<double> v;
  for (const auto& rec : records)
    if (rec.ok) v.push_back(rec.primary(window, ri));
  return v;
}

const SampleRecord* first_ok(const std::vector<SampleRecord>& records) {
  for (const auto& r : records)
    if (r.ok) return &r;
  return nullptr;
}

}  // namespace

Lattice EnsembleConfig::lattice() const { return Lattice(dim, n, box_size); }

double EnsembleConfig::effective_rstar_beta() const {
  return rstar_beta > 0 ? rstar_beta : covariance.beta;
}

void EnsembleConfig::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("d: must be 1, 2 or 3");
  Lattice lat;
  try {
    lat = lattice();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("n/L: ") + e.what());
  }
  if (!(covariance.beta > 0 && covariance.beta < dim)) throw std::invalid_argument("beta: must lie in (0, d)");
  if (!(covariance.amplitude >= 0)) throw std::invalid_argument("amplitude: must be >= 0");
  if (!(map.lambda > 0 && map.lambda < 1)) throw std::invalid_argument("lambda: must lie in (0, 1)");
  if (sample_count < 1) throw std::invalid_argument("samples: must be >= 1");
  if (radii.empty()) throw std::invalid_argument("radii: at least one radius needed");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    try {
      cube_side_sites(lat, radii[i]);
    } catch (const std::exception&) {
      throw std::invalid_argument("radii: " + format_number(radii[i]) + " is not a dyadic radius");
    }
    if (radii[i] > lat.box_size() / 8) throw std::invalid_argument("radii: must be <= L/8");
    if (i && radii[i] <= radii[i - 1]) throw std::invalid_argument("radii: must be increasing");
  }
  if (m_thresholds.empty()) throw std::invalid_argument("m_thresholds: at least one value needed");
  for (double m : m_thresholds)
    if (!(m > 0 && m <= 1)) throw std::invalid_argument("m_thresholds: each M must lie in (0, 1]");
  if (windows < 1) throw std::invalid_argument("windows: must be >= 1");
  if (compute_rstar && lat.box_size() / 4 < 4 * lat.spacing())
    throw std::invalid_argument("rstar: box too small for the minimal-radius scan");
  try {
    solve.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("tolerance: ") + e.what());
  }
}

void EnsembleConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "d") dim = static_cast<int>(parse_int(key, v));
  else if (key == "n") n = static_cast<int>(parse_int(key, v));
  else if (key == "L") box_size = parse_double(key, v);
  else if (key == "beta") covariance.beta = parse_double(key, v);
  else if (key == "amplitude") covariance.amplitude = parse_double(key, v);
  else if (key == "smoothing_scale") covariance.smoothing_scale = parse_double(key, v);
  else if (key == "map") {
    try {
      map.variant = map_variant_from_string(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("map: unknown variant '" + v + "'");
    }
  } else if (key == "lambda") {
    map.lambda = parse_double(key, v);
    solve.lambda = map.lambda;
  } else if (key == "samples") sample_count = static_cast<int>(parse_int(key, v));
  else if (key == "seed") {
    const long long s = parse_int(key, v);
    if (s < 0) throw std::invalid_argument("seed: must be >= 0");
    base_seed = static_cast<std::uint64_t>(s);
  } else if (key == "radii") radii = parse_list(key, v);
  else if (key == "m_thresholds") m_thresholds = parse_list(key, v);
  else if (key == "m_scale") m_scale = parse_double(key, v);
  else if (key == "windows") windows = static_cast<int>(parse_int(key, v));
  else if (key == "rstar") compute_rstar = parse_bool(key, v);
  else if (key == "rstar_beta") rstar_beta = parse_double(key, v);
  else if (key == "tolerance") solve.rel_tolerance = parse_double(key, v);
  else if (key == "max_iterations") solve.max_iterations = static_cast<int>(parse_int(key, v));
  else throw std::invalid_argument("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> EnsembleConfig::entries() const {
  return {{"d", std::to_string(dim)},
          {"n", std::to_string(n)},
          {"L", format_number(lattice().box_size())},
          {"beta", format_number(covariance.beta)},
          {"amplitude", format_number(covariance.amplitude)},
          {"smoothing_scale", format_number(covariance.smoothing_scale)},
          {"map", to_string(map.variant)},
          {"lambda", format_number(map.lambda)},
          {"samples", std::to_string(sample_count)},
          {"seed", std::to_string(base_seed)},
          {"radii", format_list(radii)},
          {"m_thresholds", format_list(m_thresholds)},
          {"m_scale", format_number(m_scale)},
          {"windows", std::to_string(windows)},
          {"rstar", compute_rstar ? "true" : "false"},
          {"rstar_beta", format_number(effective_rstar_beta())},
          {"tolerance", format_number(solve.rel_tolerance)},
          {"max_iterations", std::to_string(solve.max_iterations)}};
}

std::string EnsembleConfig::to_text() const {
  const auto e = entries();
  std::string out;
  for (const auto& key : known_keys()) out += key + " = " + e.at(key) + "\n";
  return out;
}

std::string EnsembleConfig::to_json() const {
  json j = json::object();
  for (const auto& [k, v] : entries()) j[k] = v;
  return j.dump();
}

EnsembleConfig parse_config(std::istream& in) {
  EnsembleConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

EnsembleConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  return parse_config(in);
}

std::array<long, 3> window_center(const EnsembleConfig& config, int window) {
  const long shift = static_cast<long>(window) * config.n / config.windows;
  std::array<long, 3> c{0, 0, 0};
  for (int j = 0; j < config.dim; ++j) c[j] = shift;
  return c;
}

SampleRecord run_sample(const EnsembleConfig& cfg, const CovarianceModel& model, int sample) {
  SampleRecord rec;
  rec.sample = sample;
  rec.base_seed = cfg.base_seed;
  rec.radii = cfg.radii;
  try {
    const Lattice& lat = model.lattice();
    const auto a = apply_phi(
        synthesize_gaussian(model, {cfg.base_seed, static_cast<std::uint64_t>(sample)}), cfg.map);
    const auto set = build_correctors(a, cfg.solve);
    rec.a_hom = set.a_hom;
    rec.phi_residual = set.phi_residual;
    rec.phi_iterations = set.phi_iterations;
    rec.flux_potential_residual = set.flux_potential_residual;
    std::vector<VectorField> phi_grads, sigma_grads;
    for (const auto& p : set.phi) phi_grads.push_back(grad(p));
    for (const auto& s : set.sigma) sigma_grads.push_back(grad(s));
    for (int w = 0; w < cfg.windows; ++w) {
      const auto c = window_center(cfg, w);
      rec.phi_averages.push_back(averages(phi_grads, lat, cfg.radii, c));
      rec.sigma_averages.push_back(averages(sigma_grads, lat, cfg.radii, c));
    }
    if (cfg.compute_rstar) {
      const auto rep = estimate_rstar(corrector_components(set), cfg.effective_rstar_beta());
      rec.rstar_radii = rep.radii;
      rec.sublinearity = rep.sublinearity;
      rec.rstar = rep.rstar;
      rec.rstar_censored = rep.censored;
    }
  } catch (const SolverError& e) {
    rec = SampleRecord{};
    rec.sample = sample;
    rec.base_seed = cfg.base_seed;
    rec.radii = cfg.radii;
    rec.ok = false;
    rec.error = std::string("solver failure: ") + e.what();
  } catch (const std::exception& e) {
    rec = SampleRecord{};
    rec.sample = sample;
    rec.base_seed = cfg.base_seed;
    rec.radii = cfg.radii;
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

std::vector<SampleRecord> run_ensemble(const EnsembleConfig& cfg, int workers, std::ostream* sink) {
  cfg.validate();
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  const auto model = CovarianceModel::from_spec(cfg.covariance, cfg.lattice());
  const int S = cfg.sample_count;
  std::vector<SampleRecord> records(S);
  std::vector<char> done(S, 0);
  int next = 0;
  std::mutex writer;
  if (sink) *sink << json{{"config", json::parse(cfg.to_json())}}.dump() << '\n' << std::flush;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (int s = 0; s < S; ++s) {
    auto rec = run_sample(cfg, model, s);
    std::lock_guard lock(writer);
    records[s] = std::move(rec);
    done[s] = 1;
    while (next < S && done[next]) {
      if (sink) *sink << record_to_json(records[next]) << '\n' << std::flush;
      ++next;
    }
  }
  return records;
}

std::string record_to_json(const SampleRecord& r) {
  json j;
  j["sample"] = r.sample;
  j["base_seed"] = r.base_seed;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  j["a_hom"] = r.a_hom;
  j["phi_residual"] = r.phi_residual;
  j["phi_iterations"] = r.phi_iterations;
  j["flux_potential_residual"] = r.flux_potential_residual;
  j["radii"] = r.radii;
  j["phi_averages"] = r.phi_averages;
  j["sigma_averages"] = r.sigma_averages;
  j["rstar_radii"] = r.rstar_radii;
  j["sublinearity"] = r.sublinearity;
  j["rstar"] = r.rstar;
  j["rstar_censored"] = r.rstar_censored;
  return j.dump();
}

SampleRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  SampleRecord r;
  r.sample = j.at("sample").get<int>();
  r.base_seed = j.at("base_seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  if (!r.ok) r.error = j.value("error", "");
  j.at("a_hom").get_to(r.a_hom);
  j.at("phi_residual").get_to(r.phi_residual);
  j.at("phi_iterations").get_to(r.phi_iterations);
  j.at("flux_potential_residual").get_to(r.flux_potential_residual);
  j.at("radii").get_to(r.radii);
  j.at("phi_averages").get_to(r.phi_averages);
  j.at("sigma_averages").get_to(r.sigma_averages);
  j.at("rstar_radii").get_to(r.rstar_radii);
  j.at("sublinearity").get_to(r.sublinearity);
  r.rstar = j.at("rstar").get<double>();
  r.rstar_censored = j.at("rstar_censored").get<bool>();
  return r;
}

std::vector<SampleRecord> read_records(std::istream& in, EnsembleConfig* config) {
  std::vector<SampleRecord> out;
  std::string line;
  bool have_config = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("config")) {
        if (config && !have_config) {
          EnsembleConfig c;
          for (const auto& [k, v] : j.at("config").items()) c.set(k, v.get<std::string>());
          *config = c;
        }
        have_config = true;
        continue;
      }
      out.push_back(record_from_json(line));
    } catch (const json::exception& e) {
      throw std::invalid_argument("record line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

VarianceDecayFit variance_decay_fit(const std::vector<SampleRecord>& records, double beta,
                                    int window) {
  const SampleRecord* ref = first_ok(records);
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.ok;
  if (ok < 50) throw std::invalid_argument("variance decay fit needs at least 50 successful samples");
  if (ref->radii.size() < 3) throw std::invalid_argument("variance decay fit needs at least 3 radii");
  if (window < 0 || window >= static_cast<int>(ref->phi_averages.size()))
    throw std::invalid_argument("window out of range");
  VarianceDecayFit f;
  f.radii = ref->radii;
  f.predicted = -beta;
  std::vector<double> lr, lv;
  for (std::size_t ri = 0; ri < f.radii.size(); ++ri) {
    const auto v = primary_values(records, window, ri);
    f.variances.push_back(stats::sample_variance(v));
    lr.push_back(std::log(f.radii[ri]));
    lv.push_back(std::log(f.variances.back()));
  }
  f.fit = stats::linear_fit(lr, lv);
  return f;
}

TailRow tail_row(const std::vector<double>& values, double r, double M, double scale) {
  if (values.empty()) throw std::invalid_argument("no values for the tail estimate");
  if (!(M > 0 && M <= 1)) throw std::invalid_argument("M must lie in (0, 1]");
  if (!(scale > 0)) throw std::invalid_argument("tail scale must be positive");
  TailRow row;
  row.r = r;
  row.M = M;
  row.threshold = M * scale;
  row.count = values.size();
  for (double v : values) row.exceed += std::abs(v) >= row.threshold;
  row.p_hat = static_cast<double>(row.exceed) / row.count;
  row.ci = stats::wilson_interval(row.exceed, row.count);
  return row;
}

TailRow tail_estimate(const std::vector<SampleRecord>& records, double r, double M, double scale) {
  const SampleRecord* ref = first_ok(records);
  if (!ref) throw std::invalid_argument("no successful samples");
  const auto it = std::find(ref->radii.begin(), ref->radii.end(), r);
  if (it == ref->radii.end()) throw std::invalid_argument("radius not present in the records");
  const std::size_t ri = it - ref->radii.begin();
  std::vector<double> v;
  for (std::size_t w = 0; w < ref->phi_averages.size(); ++w) {
    const auto vw = primary_values(records, static_cast<int>(w), ri);
    v.insert(v.end(), vw.begin(), vw.end());
  }
  return tail_row(v, r, M, scale);
}

TailReport fit_tail(std::vector<TailRow> rows, double beta, double scale) {
  TailReport rep;
  rep.beta = beta;
  rep.scale = scale;
  rep.rows = std::move(rows);
  std::vector<double> x, y;
  for (const auto& row : rep.rows)
    if (row.p_hat > 0 && row.p_hat < 1) {
      x.push_back(std::pow(row.r, beta) * row.M * row.M);
      y.push_back(-std::log(row.p_hat));
    }
  if (x.size() >= 3) {
    try {
      rep.fit = stats::linear_fit(x, y);
    } catch (const std::invalid_argument&) {
      rep.fit = {};
    }
  }
  return rep;
}

double default_tail_scale(const std::vector<SampleRecord>& records) {
  const auto v = primary_values(records, 0, 0);
  if (v.size() < 2) return 1.0;
  const double s = 2.5 * std::sqrt(stats::sample_variance(v));
  return s > 0 ? std::min(1.0, s) : 1.0;
}

TailReport tail_report(const std::vector<SampleRecord>& records, double beta,
                       const std::vector<double>& m_thresholds, double scale) {
  const SampleRecord* ref = first_ok(records);
  if (!ref) throw std::invalid_argument("no successful samples");
  if (!(scale > 0)) scale = default_tail_scale(records);
  std::vector<TailRow> rows;
  for (double r : ref->radii)
    for (double M : m_thresholds) rows.push_back(tail_estimate(records, r, M, scale));
  return fit_tail(std::move(rows), beta, scale);
}

RstarTail rstar_tail(const std::vector<double>& rstar, const std::vector<bool>& censored,
                     const std::vector<double>& r0_grid, double beta) {
  if (rstar.size() != censored.size()) throw std::invalid_argument("rstar and censoring flags differ in length");
  if (rstar.empty()) throw std::invalid_argument("no r_* values");
  RstarTail t;
  t.beta = beta;
  t.r0 = r0_grid;
  t.count = rstar.size();
  for (bool c : censored) t.censored += c;
  std::vector<double> weights;
  for (double r0 : r0_grid) {
    std::size_t ex = 0, ex_unc = 0;
    for (std::size_t s = 0; s < rstar.size(); ++s) {
      if (censored[s] || rstar[s] > r0) ++ex;
      if (!censored[s] && rstar[s] > r0) ++ex_unc;
    }
    t.exceed.push_back(ex);
    t.p_hat.push_back(static_cast<double>(ex) / t.count);
    t.ci.push_back(stats::wilson_interval(ex, t.count));
    const std::size_t unc = t.count - t.censored;
    t.p_hat_uncensored.push_back(unc ? static_cast<double>(ex_unc) / unc : 0.0);
    weights.push_back(1.0);
  }
  t.p_smoothed = stats::isotonic_nonincreasing(t.p_hat, weights);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.r0.size(); ++i)
    if (t.p_smoothed[i] > 0 && t.p_smoothed[i] < 1) {
      x.push_back(std::pow(t.r0[i], beta));
      y.push_back(-std::log(t.p_smoothed[i]));
    }
  if (x.size() >= 2) {
    try {
      t.fit = stats::linear_fit(x, y);
    } catch (const std::invalid_argument&) {
      t.fit = {};
    }
  }
  return t;
}

RstarTail rstar_tail(const std::vector<SampleRecord>& records, double beta) {
  const SampleRecord* ref = first_ok(records);
  if (!ref || ref->rstar_radii.empty()) throw std::invalid_argument("records carry no r_* values");
  std::vector<double> rs;
  std::vector<bool> cens;
  for (const auto& r : records)
    if (r.ok) rs.push_back(r.rstar), cens.push_back(r.rstar_censored);
  return rstar_tail(rs, cens, ref->rstar_radii, beta);
}

StationarityReport stationarity_check(const std::vector<SampleRecord>& records) {
  const SampleRecord* ref = first_ok(records);
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.ok;
  if (ok < 50) throw std::invalid_argument("stationarity check needs at least 50 successful samples");
  StationarityReport rep;
  const int W = static_cast<int>(ref->phi_averages.size());
  for (std::size_t ri = 0; ri < ref->radii.size(); ++ri) {
    const auto base = primary_values(records, 0, ri);
    for (int w = 0; w < W; ++w) {
      StationarityRow row;
      row.window = w;
      row.r = ref->radii[ri];
      const auto v = primary_values(records, w, ri);
      row.mean = stats::mean_interval(v, 0.99);
      row.zero_outside = row.mean.ci.low > 0 || row.mean.ci.high < 0;
      if (w > 0) {
        std::vector<double> diff(v.size());
        for (std::size_t s = 0; s < v.size(); ++s) diff[s] = v[s] - base[s];
        row.difference = stats::mean_interval(diff, 0.99);
        row.differs = row.difference.ci.low > 0 || row.difference.ci.high < 0;
      }
      rep.flagged = rep.flagged || row.zero_outside || row.differs;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

CampaignReport write_report(const std::vector<SampleRecord>& records, const EnsembleConfig& cfg,
                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CampaignReport rep;
  for (const auto& r : records) rep.failures += !r.ok;
  const SampleRecord* ref = first_ok(records);
  if (!ref) throw std::invalid_argument("no successful samples to report on");
  const double beta = cfg.covariance.beta;
  const std::string cfg_json = cfg.to_json();

  try {
    rep.variance = variance_decay_fit(records, beta);
    rep.has_variance = true;
  } catch (const std::invalid_argument&) {
  }
  rep.tail = tail_report(records, beta, cfg.m_thresholds, cfg.m_scale);
  if (!ref->rstar_radii.empty()) {
    rep.rstar = rstar_tail(records, cfg.effective_rstar_beta());
    rep.has_rstar = true;
  }
  try {
    rep.stationarity = stationarity_check(records);
    rep.has_stationarity = true;
  } catch (const std::invalid_argument&) {
  }

  std::ofstream csv(out_dir / "summary.csv");
  if (!csv) throw std::runtime_error("cannot write summary.csv");
  csv.precision(10);
  csv << "# config = " << cfg_json << "\n";
  csv << "table,label,r,M,estimate,ci_low,ci_high,count\n";
  auto fit_rows = [&](const std::string& table, const stats::LinearFit& f) {
    csv << table << ",slope,,," << f.slope << ',' << f.slope_ci_low << ',' << f.slope_ci_high << ','
        << f.count << '\n';
    csv << table << ",intercept,,," << f.intercept << ",,," << f.count << '\n';
    csv << table << ",r_squared,,," << f.r_squared << ",,," << f.count << '\n';
  };
  csv << "samples,failures,,," << rep.failures << ",,," << records.size() << '\n';
  if (rep.has_variance) {
    for (std::size_t i = 0; i < rep.variance.radii.size(); ++i)
      csv << "variance,F_r grad phi_1.e_1," << rep.variance.radii[i] << ",," << rep.variance.variances[i]
          << ",,," << rep.variance.fit.count << '\n';
    fit_rows("variance_fit", rep.variance.fit);
    csv << "variance_fit,predicted_slope,,," << rep.variance.predicted << ",,,\n";
  }
  csv << "tail,scale,,," << rep.tail.scale << ",,,\n";
  for (const auto& row : rep.tail.rows)
    csv << "tail,p_hat," << row.r << ',' << row.M << ',' << row.p_hat << ',' << row.ci.low << ','
        << row.ci.high << ',' << row.count << '\n';
  if (rep.tail.fit.count) fit_rows("tail_fit", rep.tail.fit);
  if (rep.has_rstar) {
    const auto& t = rep.rstar;
    csv << "rstar_tail,censored,,," << t.censored << ",,," << t.count << '\n';
    for (std::size_t i = 0; i < t.r0.size(); ++i) {
      csv << "rstar_tail,p_hat," << t.r0[i] << ",," << t.p_hat[i] << ',' << t.ci[i].low << ','
          << t.ci[i].high << ',' << t.count << '\n';
      csv << "rstar_tail,p_smoothed," << t.r0[i] << ",," << t.p_smoothed[i] << ",,," << t.count << '\n';
      csv << "rstar_tail,p_hat_uncensored," << t.r0[i] << ",," << t.p_hat_uncensored[i] << ",,,"
          << t.count - t.censored << '\n';
    }
    if (t.fit.count) fit_rows("rstar_fit", t.fit);
  }
  if (rep.has_stationarity) {
    for (const auto& row : rep.stationarity.rows) {
      csv << "stationarity,mean_window_" << row.window << ',' << row.r << ",," << row.mean.mean << ','
          << row.mean.ci.low << ',' << row.mean.ci.high << ',' << (row.zero_outside ? "flagged" : "ok")
          << '\n';
      if (row.window > 0)
        csv << "stationarity,difference_window_" << row.window << ',' << row.r << ",,"
            << row.difference.mean << ',' << row.difference.ci.low << ',' << row.difference.ci.high
            << ',' << (row.differs ? "flagged" : "ok") << '\n';
    }
  }

  {
    svg::Plot p{"Variance of cube averages of grad phi_1 . e_1", "r", "Var", true, true, cfg_json, {}};
    if (rep.has_variance) {
      svg::Series s{"measured", rep.variance.radii, rep.variance.variances, {}, {}, true};
      svg::Series fit{"fit slope " + format_number(std::round(rep.variance.fit.slope * 1000) / 1000), {}, {}, {}, {}, true};
      svg::Series pred{"slope -beta", {}, {}, {}, {}, true};
      for (double r : rep.variance.radii) {
        fit.x.push_back(r);
        fit.y.push_back(std::exp(rep.variance.fit.intercept + rep.variance.fit.slope * std::log(r)));
        pred.x.push_back(r);
        pred.y.push_back(rep.variance.variances.front() * std::pow(r / rep.variance.radii.front(), -beta));
      }
      p.series = {s, fit, pred};
    }
    svg::write(p, out_dir / "variance_decay.svg");
  }
  {
    svg::Plot p{"Exceedance probabilities", "r^beta M^2", "P(|F_r| >= M scale)", false, true, cfg_json, {}};
    for (double r : ref->radii) {
      svg::Series s{"r = " + format_number(r), {}, {}, {}, {}, true};
      for (const auto& row : rep.tail.rows)
        if (row.r == r) {
          s.x.push_back(std::pow(r, beta) * row.M * row.M);
          s.y.push_back(row.p_hat);
          s.y_low.push_back(row.ci.low);
          s.y_high.push_back(row.ci.high);
        }
      p.series.push_back(s);
    }
    svg::write(p, out_dir / "tail_curves.svg");
  }
  {
    svg::Plot p{"Survival of the minimal radius", "r0", "P(r_* > r0)", true, true, cfg_json, {}};
    if (rep.has_rstar) {
      p.series.push_back({"raw", rep.rstar.r0, rep.rstar.p_hat, {}, {}, false});
      std::vector<double> lo, hi;
      for (const auto& iv : rep.rstar.ci) lo.push_back(iv.low), hi.push_back(iv.high);
      p.series.back().y_low = lo;
      p.series.back().y_high = hi;
      p.series.push_back({"isotonic", rep.rstar.r0, rep.rstar.p_smoothed, {}, {}, true});
    }
    svg::write(p, out_dir / "rstar_survival.svg");
  }
  return rep;
}

}  // namespace correctorlab
