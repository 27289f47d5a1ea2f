#pragma once

#include "rfsbound/fim.hpp"
#include "rfsbound/scenarios.hpp"
#include "rfsbound/seqtree.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfsbound {

/// Which candidate a pattern's bound came from. Star charges the false
/// absence error e1, DoubleStar mixes e0 with the inverse information, and
/// Detection is the plain inverse information of a detection-ended pattern.
enum class Branch : std::uint8_t { Star, DoubleStar, Detection };

const char* to_string(Branch b);

class CapExceeded : public std::runtime_error {
 public:
  explicit CapExceeded(const std::string& what) : std::runtime_error("CapExceeded: " + what) {}
};

struct BranchBound {
  StateMat p = StateMat::Zero();
  Branch branch = Branch::DoubleStar;
};

/// Bound of an empty-ended pattern with probability `pr_empty` of which
/// `rho` has an empty state. P* wins only when its trace is strictly smaller.
BranchBound bound_empty_branch(const StateMat& j, double pr_empty, double rho,
                               const BernoulliParams& params);

StateMat bound_detection_branch(const StateMat& j, double pr);

struct BoundLayer {
  int k = 0;
  std::vector<StateMat, Eigen::aligned_allocator<StateMat>> per_seq;
  std::vector<Branch> selected_branch;
};

/// Per-pattern bounds from materialized layers; codes >= 2^(k-1) are
/// detection-ended.
BoundLayer assemble_bound_layer(const SequenceLayer& seq, const FimLayer& fims,
                                const BernoulliParams& params);

/// Fixed-order sum of the per-pattern bounds.
StateMat total_bound(const BoundLayer& layer);

Eigen::VectorXd rmse_components(const Eigen::MatrixXd& p, const std::vector<int>& indices);
StateVec rmse_components(const StateMat& p);

struct ScanBound {
  int k = 0;
  StateMat total = StateMat::Zero();
  StateVec rmse = StateVec::Zero();
  double prob_sum = 0.0;   ///< probability of the patterns still held
  double mass_kept = 1.0;  ///< 1 - probability dropped by pruning so far
  std::size_t nodes = 0;
  std::size_t star = 0;
  std::size_t double_star = 0;
  std::size_t detection = 0;
  double max_rho = 0.0;
  std::size_t psd_failures = 0;  ///< J, P_{k,n} or P_k failing is_psd
};

struct BoundSeries {
  std::vector<ScanBound> per_scan;

  double dropped_mass() const { return per_scan.empty() ? 0.0 : 1.0 - per_scan.back().mass_kept; }
  std::size_t psd_failures() const;
};

struct PipelineOptions {
  int max_scans = 24;
  /// Patterns with probability below this are dropped (0 keeps everything).
  double prune_eps = 0.0;
  bool check_invariants = true;
  double psd_tol = 1e-9;
  std::size_t memory_budget = std::size_t{2} << 30;
};

/// Bytes one pattern occupies in the fused pipeline.
std::size_t bytes_per_node();

/// The Bernoulli-RFS bound for scans 1..k_max.
BoundSeries rfs_bound_series(const ScenarioSpec& spec, int k_max, const PipelineOptions& options = {});

/// Enumeration PCRLB: an always-present target, detection patterns weighted
/// by their binomial probabilities, no cardinality terms.
BoundSeries enum_pcrlb_series(const ScenarioSpec& spec, int k_max, const PipelineOptions& options = {});

}  // namespace rfsbound
