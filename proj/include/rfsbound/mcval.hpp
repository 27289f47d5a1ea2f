#pragma once

#include "rfsbound/models.hpp"
#include "rfsbound/scenarios.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfsbound {

class DegenerateWeights : public std::runtime_error {
 public:
  explicit DegenerateWeights(const std::string& what)
      : std::runtime_error("DegenerateWeights: " + what) {}
};

using ParticleVec = std::vector<StateVec, Eigen::aligned_allocator<StateVec>>;

/// Existence probability plus a weighted particle cloud for the state
/// density given existence.
struct BernoulliPosterior {
  double q_exist = 0.0;
  ParticleVec particles;
  std::vector<double> weights;

  double effective_sample_size() const;
};

struct FilterConfig {
  std::size_t particles = 2000;
  double threshold = 0.5;
  /// Minimum share of particles spent on births when the birth weight is
  /// nonzero.
  double birth_floor = 0.1;
  /// Kernel jitter after resampling.
  bool regularize = true;
};

/// p(Z = empty) before the update, given the predicted existence.
double predicted_empty_probability(double q_exist, double pd);

/// Posterior probability of an empty state after an empty scan, from the
/// predicted probability of an empty state.
double absence_posterior(double p_empty_prior, double pd);

/// Scan-0 posterior: existence b, particles drawn from the prior.
BernoulliPosterior initial_posterior(const GaussianDensity& prior, double b, const FilterConfig& config,
                                     Rng& rng);

/// Prediction through the existence chain and the motion model. With
/// `existence_transition` false only the state moves (the scan 0 to 1 step).
BernoulliPosterior bpf_predict(const BernoulliPosterior& post, const BernoulliParams& params,
                               const ScanModel& model, const GaussianDensity& birth,
                               const FilterConfig& config, Rng& rng, bool existence_transition = true);

BernoulliPosterior bpf_update(const BernoulliPosterior& post, const std::optional<MeasVec>& z,
                              const BernoulliParams& params, const ScanModel& model);

std::optional<StateVec> extract_estimate(const BernoulliPosterior& post, double threshold);

StateVec set_error(const std::optional<StateVec>& truth, const std::optional<StateVec>& est,
                   const BernoulliParams& params);

struct RunResult {
  std::vector<StateVec, Eigen::aligned_allocator<StateVec>> errors;  // scans 1..K
  std::vector<int> truth_cardinality;
  std::vector<int> estimate_cardinality;
  bool degenerate = false;
};

RunResult simulate_run(const ScenarioSpec& spec, int k_max, const FilterConfig& config,
                       std::uint64_t seed, std::uint64_t run);

struct MonteCarloScan {
  int k = 0;
  StateMat mse = StateMat::Zero();
  StateVec rmse = StateVec::Zero();
  double trace = 0.0;
  double trace_se = 0.0;  ///< standard error of the mean trace
};

struct MonteCarloSeries {
  std::vector<MonteCarloScan> per_scan;
  std::size_t runs = 0;
  std::size_t degenerate_runs = 0;
};

/// Average of e e^T over independent runs; run i uses a stream seeded by
/// (seed, i), so the output depends only on the arguments.
MonteCarloSeries empirical_mse(const ScenarioSpec& spec, int k_max, std::size_t n_runs,
                               std::uint64_t seed, const FilterConfig& config = {});

}  // namespace rfsbound
