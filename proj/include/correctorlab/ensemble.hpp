#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "correctorlab/ellipticsolve.hpp"
#include "correctorlab/gaussfield.hpp"
#include "correctorlab/lattice.hpp"
#include "correctorlab/stats.hpp"

namespace correctorlab {

/// Campaign parameters. The text form is flat `key = value` lines; `#` starts a comment.
///
///   d, n, L                      lattice (L <= 0: L = n)
///   beta, amplitude, smoothing_scale
///   map (scalar-isotropic | eigenvalue-clamp), lambda
///   samples, seed
///   radii                        comma list of dyadic radii <= L/8
///   m_thresholds                 comma list, each in (0, 1]
///   m_scale                      physical unit of M; <= 0 picks it from the data
///   windows                      number of translated windows (>= 1)
///   rstar                        true | false
///   rstar_beta                   exponent in the minimal-radius bound (<= 0: beta)
///   tolerance, max_iterations
struct EnsembleConfig {
  int dim = 2;
  int n = 64;
  double box_size = 0.0;
  CovarianceSpec covariance;
  CoefficientMapSpec map;
  int sample_count = 1;
  std::uint64_t base_seed = 0;
  std::vector<double> radii{4, 8};
  std::vector<double> m_thresholds{0.25, 0.5, 0.75, 1.0};
  double m_scale = 0.0;
  int windows = 2;
  bool compute_rstar = true;
  double rstar_beta = 0.0;
  SolveOptions solve;

  Lattice lattice() const;
  double effective_rstar_beta() const;
  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
  /// Sets one key from its text value; unknown keys throw.
  void set(const std::string& key, const std::string& value);
  /// All keys in their text form, in a fixed order.
  std::map<std::string, std::string> entries() const;
  std::string to_text() const;
  std::string to_json() const;
};

EnsembleConfig parse_config(std::istream& in);
EnsembleConfig load_config(const std::filesystem::path& path);

/// Centre (site coordinates) of window w: the origin shifted by w n / windows along
/// every axis.
std::array<long, 3> window_center(const EnsembleConfig& config, int window);

struct SampleRecord {
  int sample = 0;
  std::uint64_t base_seed = 0;
  bool ok = true;
  std::string error;
  std::vector<double> a_hom;
  std::vector<double> phi_residual;
  std::vector<int> phi_iterations;
  std::vector<double> flux_potential_residual;
  std::vector<double> radii;
  /// [window][radius][i * d + c]: average of d_c phi_i over the cube.
  std::vector<std::vector<std::vector<double>>> phi_averages;
  /// [window][radius][slot * d + c]: average of d_c sigma_slot (slots as in CorrectorSet).
  std::vector<std::vector<std::vector<double>>> sigma_averages;
  std::vector<double> rstar_radii;
  std::vector<double> sublinearity;
  double rstar = 0.0;
  bool rstar_censored = false;

  /// F_r grad phi_1 . e_1 in window w at radius index ri.
  double primary(int window, std::size_t ri) const { return phi_averages[window][ri][0]; }
};

/// One realization; solver failures are captured in the record.
SampleRecord run_sample(const EnsembleConfig& config, const CovarianceModel& model, int sample);

/// Runs all samples on `workers` threads. Records are returned in sample order and,
/// when `sink` is given, written there as JSON lines in sample order as soon as each
/// prefix is complete; the first line carries the configuration.
std::vector<SampleRecord> run_ensemble(const EnsembleConfig& config, int workers,
                                       std::ostream* sink = nullptr);

std::string record_to_json(const SampleRecord& record);
SampleRecord record_from_json(const std::string& line);
/// Reads a JSON-lines stream; configuration lines are returned through `config`
/// (the first one wins) and skipped. Blank lines are ignored.
std::vector<SampleRecord> read_records(std::istream& in, EnsembleConfig* config = nullptr);

struct VarianceDecayFit {
  std::vector<double> radii;
  std::vector<double> variances;
  stats::LinearFit fit;  // log Var against log r
  double predicted = 0.0;
};

/// Var over successful samples of F_r grad phi_1 . e_1 in one window. Needs >= 50
/// samples and >= 3 radii.
VarianceDecayFit variance_decay_fit(const std::vector<SampleRecord>& records, double beta,
                                    int window = 0);

struct TailRow {
  double r = 0.0;
  double M = 0.0;
  double threshold = 0.0;  // M * scale
  std::size_t exceed = 0;
  std::size_t count = 0;
  double p_hat = 0.0;
  stats::Interval ci;
};

/// Fraction of |values| >= M * scale with its score interval.
TailRow tail_row(const std::vector<double>& values, double r, double M, double scale);

/// From records: |F_r grad phi_1 . e_1| pooled over windows.
TailRow tail_estimate(const std::vector<SampleRecord>& records, double r, double M, double scale);

struct TailReport {
  double beta = 0.0;
  double scale = 0.0;
  std::vector<TailRow> rows;
  /// -log p_hat against r^beta M^2 over rows with 0 < p_hat < 1; count = 0 when
  /// fewer than three such rows exist.
  stats::LinearFit fit;
};

TailReport fit_tail(std::vector<TailRow> rows, double beta, double scale);

/// Default scale: min(1, 2.5 sd) of the primary functional at the smallest radius.
double default_tail_scale(const std::vector<SampleRecord>& records);

TailReport tail_report(const std::vector<SampleRecord>& records, double beta,
                       const std::vector<double>& m_thresholds, double scale);

struct RstarTail {
  double beta = 0.0;
  std::vector<double> r0;
  std::vector<std::size_t> exceed;
  std::vector<double> p_hat;
  std::vector<double> p_smoothed;  // isotonic, nonincreasing
  std::vector<stats::Interval> ci;
  std::vector<double> p_hat_uncensored;
  std::size_t count = 0;
  std::size_t censored = 0;
  stats::LinearFit fit;  // -log p_smoothed against r0^beta where 0 < p < 1
};

/// P(r_* > r0); censored values count as exceedances at every r0.
RstarTail rstar_tail(const std::vector<double>& rstar, const std::vector<bool>& censored,
                     const std::vector<double>& r0_grid, double beta);
RstarTail rstar_tail(const std::vector<SampleRecord>& records, double beta);

struct StationarityRow {
  int window = 0;
  double r = 0.0;
  stats::MeanEstimate mean;       // 99% interval
  bool zero_outside = false;
  stats::MeanEstimate difference;  // paired against window 0, 99% interval
  bool differs = false;
};

struct StationarityReport {
  std::vector<StationarityRow> rows;
  bool flagged = false;
};

/// Needs >= 50 successful samples; uses F_r grad phi_1 . e_1.
StationarityReport stationarity_check(const std::vector<SampleRecord>& records);

struct CampaignReport {
  VarianceDecayFit variance;
  bool has_variance = false;
  TailReport tail;
  RstarTail rstar;
  bool has_rstar = false;
  StationarityReport stationarity;
  bool has_stationarity = false;
  std::size_t failures = 0;
};

/// Runs every applicable analysis (those whose preconditions fail are skipped) and
/// writes summary.csv, variance_decay.svg, tail_curves.svg and rstar_survival.svg.
CampaignReport write_report(const std::vector<SampleRecord>& records,
                            const EnsembleConfig& config, const std::filesystem::path& out_dir);

}  // namespace correctorlab
