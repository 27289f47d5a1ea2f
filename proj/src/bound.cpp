#include "rfsbound/bound.hpp"

#include "rfsbound/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace rfsbound {

namespace {

constexpr std::size_t kGrain = std::size_t{1} << 12;

struct Node {
  StateMat j;
  double prob;
  double p_empty_next;
  double rho;
  bool detected_last;

  EIGEN_MAKE_ALIGNED_OPERATOR_NEW
};

using NodeVec = std::vector<Node, Eigen::aligned_allocator<Node>>;

struct Partial {
  StateMat total = StateMat::Zero();
  CompensatedSum<double> prob;
  std::size_t star = 0;
  std::size_t double_star = 0;
  std::size_t detection = 0;
  double max_rho = 0.0;
  std::size_t psd_failures = 0;

  EIGEN_MAKE_ALIGNED_OPERATOR_NEW
};

ScanBound reduce_scan(int k, const NodeVec& nodes, const BernoulliParams& params, bool enumeration,
                      const PipelineOptions& options) {
  const std::size_t n = nodes.size();
  const std::size_t chunks = (n + kGrain - 1) / kGrain;
  std::vector<Partial, Eigen::aligned_allocator<Partial>> partials(chunks);

  parallel_chunks(n, kGrain, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Partial& acc = partials[chunk];
    for (std::size_t i = begin; i < end; ++i) {
      const Node& node = nodes[i];
      StateMat p;
      if (node.detected_last) {
        p = bound_detection_branch(node.j, node.prob);
        ++acc.detection;
      } else if (enumeration) {
        p = bound_detection_branch(node.j, node.prob);
        ++acc.double_star;
      } else {
        const BranchBound bb = bound_empty_branch(node.j, node.prob, node.rho, params);
        p = bb.p;
        ++(bb.branch == Branch::Star ? acc.star : acc.double_star);
      }
      acc.total += p;
      acc.prob.add(node.prob);
      acc.max_rho = std::max(acc.max_rho, node.rho);
      if (options.check_invariants &&
          (!is_psd(node.j, options.psd_tol) || !is_psd(p, options.psd_tol))) {
        ++acc.psd_failures;
      }
    }
  });

  ScanBound out;
  out.k = k;
  out.nodes = n;
  CompensatedSum<double> prob;
  for (const Partial& part : partials) {
    out.total += part.total;
    prob.add(part.prob.value());
    out.star += part.star;
    out.double_star += part.double_star;
    out.detection += part.detection;
    out.max_rho = std::max(out.max_rho, part.max_rho);
    out.psd_failures += part.psd_failures;
  }
  out.total = symmetrized(out.total);
  out.prob_sum = prob.value();
  out.rmse = rmse_components(out.total);
  if (options.check_invariants && !is_psd(out.total, options.psd_tol)) {
    ++out.psd_failures;
  }
  return out;
}

void check_budget(std::size_t nodes, const PipelineOptions& options, int k) {
  if (nodes > options.memory_budget / bytes_per_node()) {
    throw CapExceeded(std::to_string(nodes) + " patterns at scan " + std::to_string(k) +
                      " exceed the memory budget of " + std::to_string(options.memory_budget) +
                      " bytes");
  }
}

BoundSeries run_pipeline(const ScenarioSpec& spec, int k_max, const PipelineOptions& options,
                         const BernoulliParams& params, bool enumeration) {
  spec.validate();
  params.validate();
  if (k_max < 1 || k_max > spec.scans) {
    throw std::out_of_range("k_max must be in [1, scans]");
  }
  if (k_max > options.max_scans) {
    throw CapExceeded("k_max " + std::to_string(k_max) + " is above the cap of " +
                      std::to_string(options.max_scans));
  }
  if (!(options.prune_eps >= 0.0)) {
    throw std::invalid_argument("prune_eps must be >= 0");
  }
  const bool pruning = options.prune_eps > 0.0;

  NodeVec nodes;
  if (!pruning) {
    const std::size_t full = std::size_t{1} << k_max;
    check_budget(full, options, k_max);
    nodes.reserve(full);
  }

  BoundSeries series;
  CompensatedSum<double> dropped;
  const StateMat j0 = initial_fim<double, kStateDim>(spec.prior_cov());

  for (int k = 1; k <= k_max; ++k) {
    const FimStep step = FimStep::from(scan_models(spec, k));
    if (k == 1) {
      const NodeChildren roots = root_nodes(params);
      const FimChildren fims = step.split(j0);
      nodes.push_back({fims.on_empty, roots.on_empty.prob, roots.on_empty.p_empty_next,
                       roots.on_empty.rho, false});
      nodes.push_back({fims.on_detection, roots.on_detection.prob,
                       roots.on_detection.p_empty_next, roots.on_detection.rho, true});
    } else {
      const std::size_t n = nodes.size();
      check_budget(2 * n, options, k);
      nodes.resize(2 * n);
      // Children of i land at i (empty appended) and i + n (detection
      // appended); every index is written by exactly one parent.
      parallel_chunks(n, kGrain, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const Node parent = nodes[i];
          const NodeChildren seq =
              split(SequenceNode{parent.prob, parent.p_empty_next, parent.rho}, params);
          const FimChildren fims = step.split(parent.j);
          nodes[i + n] = {fims.on_detection, seq.on_detection.prob,
                          seq.on_detection.p_empty_next, seq.on_detection.rho, true};
          nodes[i] = {fims.on_empty, seq.on_empty.prob, seq.on_empty.p_empty_next,
                      seq.on_empty.rho, false};
        }
      });
    }

    if (pruning) {
      std::size_t kept = 0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].prob < options.prune_eps) {
          dropped.add(nodes[i].prob);
          continue;
        }
        if (kept != i) {
          nodes[kept] = nodes[i];
        }
        ++kept;
      }
      nodes.resize(kept);
    }

    ScanBound scan = reduce_scan(k, nodes, params, enumeration, options);
    scan.mass_kept = 1.0 - dropped.value();
    series.per_scan.push_back(scan);
  }
  return series;
}

}  // namespace

const char* to_string(Branch b) {
  switch (b) {
    case Branch::Star:
      return "star";
    case Branch::DoubleStar:
      return "double_star";
    case Branch::Detection:
      return "detection";
  }
  return "?";
}

BranchBound bound_empty_branch(const StateMat& j, double pr_empty, double rho,
                               const BernoulliParams& params) {
  const StateMat star = outer(params.e1) * (pr_empty - rho);
  const StateMat double_star = outer(params.e0) * rho + invert_spd(j) * pr_empty;
  if (trace(star) < trace(double_star)) {
    return {star, Branch::Star};
  }
  return {double_star, Branch::DoubleStar};
}

StateMat bound_detection_branch(const StateMat& j, double pr) {
  return invert_spd(j) * pr;
}

BoundLayer assemble_bound_layer(const SequenceLayer& seq, const FimLayer& fims,
                                const BernoulliParams& params) {
  if (seq.k != fims.k || seq.size() != fims.fims.size()) {
    throw std::invalid_argument("assemble_bound_layer: layers do not match");
  }
  BoundLayer out;
  out.k = seq.k;
  out.per_seq.resize(seq.size());
  out.selected_branch.resize(seq.size());
  const std::size_t half = seq.size() / 2;
  for (std::size_t code = 0; code < seq.size(); ++code) {
    if (code >= half) {
      out.per_seq[code] = bound_detection_branch(fims.fims[code], seq.prob[code]);
      out.selected_branch[code] = Branch::Detection;
    } else {
      const BranchBound bb = bound_empty_branch(fims.fims[code], seq.prob[code], seq.rho[code], params);
      out.per_seq[code] = bb.p;
      out.selected_branch[code] = bb.branch;
    }
  }
  return out;
}

StateMat total_bound(const BoundLayer& layer) {
  StateMat sum = StateMat::Zero();
  for (const StateMat& p : layer.per_seq) {
    sum += p;
  }
  return symmetrized(sum);
}

Eigen::VectorXd rmse_components(const Eigen::MatrixXd& p, const std::vector<int>& indices) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= p.rows() || idx >= p.cols()) {
      throw std::out_of_range("rmse_components: index out of range");
    }
    out[static_cast<Eigen::Index>(i)] = std::sqrt(std::max(p(idx, idx), 0.0));
  }
  return out;
}

StateVec rmse_components(const StateMat& p) {
  return p.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::size_t BoundSeries::psd_failures() const {
  std::size_t n = 0;
  for (const ScanBound& s : per_scan) {
    n += s.psd_failures;
  }
  return n;
}

std::size_t bytes_per_node() { return sizeof(Node); }

BoundSeries rfs_bound_series(const ScenarioSpec& spec, int k_max, const PipelineOptions& options) {
  return run_pipeline(spec, k_max, options, spec.params, false);
}

BoundSeries enum_pcrlb_series(const ScenarioSpec& spec, int k_max, const PipelineOptions& options) {
  BernoulliParams always = spec.params;
  always.b = 1.0;
  always.r = 1.0;
  return run_pipeline(spec, k_max, options, always, true);
}

}  // namespace rfsbound
