#include "rfsbound/seqtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfsbound {

namespace {

constexpr double kRangeSlack = 1e-12;

SequenceLayer layer_from_nodes(int k, const std::vector<SequenceNode>& nodes) {
  SequenceLayer layer;
  layer.k = k;
  layer.prob.reserve(nodes.size());
  layer.p_empty_next.reserve(nodes.size());
  layer.rho.reserve(nodes.size());
  for (const auto& n : nodes) {
    layer.prob.push_back(n.prob);
    layer.p_empty_next.push_back(n.p_empty_next);
    layer.rho.push_back(n.rho);
  }
  return layer;
}

}  // namespace

double SequenceLayer::total_probability() const {
  CompensatedSum<double> sum;
  for (double p : prob) {
    sum.add(p);
  }
  return sum.value();
}

double gamma(double p_prev, const BernoulliParams& params, bool last_was_detection) {
  const double pd = params.pd;
  const double r = params.r;
  if (last_was_detection) {
    return 1.0 - r * pd;
  }
  if (p_prev < (1.0 - pd) - kRangeSlack || p_prev > 1.0 + kRangeSlack) {
    throw DomainError("gamma: previous empty-measurement probability outside [1 - pd, 1]");
  }
  // Posterior probability that the state was empty after the empty scan.
  const double absent = std::clamp((p_prev - (1.0 - pd)) / (pd * p_prev), 0.0, 1.0);
  const double out = 1.0 - r * pd + pd * (2.0 * r - 1.0) * absent;
  return std::clamp(out, 1.0 - pd, 1.0);
}

NodeChildren root_nodes(const BernoulliParams& params) {
  const double b = params.b;
  const double pd = params.pd;
  NodeChildren roots;
  roots.on_empty.prob = 1.0 - b * pd;
  roots.on_empty.rho = 1.0 - b;
  roots.on_empty.p_empty_next = gamma(1.0 - b * pd, params, false);
  roots.on_detection.prob = b * pd;
  roots.on_detection.rho = 0.0;
  roots.on_detection.p_empty_next = gamma(0.0, params, true);
  return roots;
}

NodeChildren split(const SequenceNode& parent, const BernoulliParams& params) {
  const double pd = params.pd;
  const double pe = parent.p_empty_next;
  NodeChildren c;
  c.on_empty.prob = parent.prob * pe;
  c.on_empty.rho = std::clamp(parent.prob * (pe - (1.0 - pd)) / pd, 0.0, c.on_empty.prob);
  c.on_empty.p_empty_next = gamma(pe, params, false);
  c.on_detection.prob = parent.prob * (1.0 - pe);
  c.on_detection.rho = 0.0;
  c.on_detection.p_empty_next = gamma(pe, params, true);
  return c;
}

SequenceLayer init_layer(const BernoulliParams& params) {
  params.validate();
  const NodeChildren roots = root_nodes(params);
  return layer_from_nodes(1, {roots.on_empty, roots.on_detection});
}

SequenceLayer advance(const SequenceLayer& layer, const BernoulliParams& params) {
  const std::size_t n = layer.size();
  std::vector<SequenceNode> next(2 * n);
  for (std::size_t m = 0; m < n; ++m) {
    const NodeChildren c = split(layer.node(m), params);
    next[m] = c.on_empty;
    next[m + n] = c.on_detection;
  }
  return layer_from_nodes(layer.k + 1, next);
}

SequenceLayer brute_force_layer(const BernoulliParams& params, int k) {
  params.validate();
  if (k < 1 || k > 12) {
    throw std::invalid_argument("brute_force_layer: k must be in [1, 12]");
  }
  const double b = params.b;
  const double r = params.r;
  const double pd = params.pd;
  const std::uint32_t count = std::uint32_t{1} << k;

  // Probability that the next scan is empty given the current existence.
  const double empty_next_if_present = r * (1.0 - pd) + (1.0 - r);
  const double empty_next_if_absent = r + (1.0 - r) * (1.0 - pd);

  std::vector<double> prob(count, 0.0);
  std::vector<double> rho(count, 0.0);
  std::vector<double> empty_mass(count, 0.0);

  for (std::uint32_t path = 0; path < count; ++path) {
    // Bit j of `path` = target present at scan j+1.
    double path_prob = (path & 1u) ? b : 1.0 - b;
    for (int j = 1; j < k; ++j) {
      const bool prev = (path >> (j - 1)) & 1u;
      const bool cur = (path >> j) & 1u;
      path_prob *= (prev == cur) ? r : 1.0 - r;
    }
    if (path_prob == 0.0) {
      continue;
    }
    const bool present_last = (path >> (k - 1)) & 1u;
    for (std::uint32_t code = 0; code < count; ++code) {
      double p = path_prob;
      for (int j = 0; j < k && p != 0.0; ++j) {
        const bool present = (path >> j) & 1u;
        const bool detected = (code >> j) & 1u;
        if (present) {
          p *= detected ? pd : 1.0 - pd;
        } else if (detected) {
          p = 0.0;
        }
      }
      if (p == 0.0) {
        continue;
      }
      prob[code] += p;
      if (!present_last) {
        rho[code] += p;
      }
      empty_mass[code] += p * (present_last ? empty_next_if_present : empty_next_if_absent);
    }
  }

  SequenceLayer layer;
  layer.k = k;
  layer.prob = prob;
  layer.rho = rho;
  layer.p_empty_next.resize(count);
  for (std::uint32_t code = 0; code < count; ++code) {
    layer.p_empty_next[code] =
        prob[code] > 0.0 ? empty_mass[code] / prob[code] : std::numeric_limits<double>::quiet_NaN();
  }
  return layer;
}

}  // namespace rfsbound
