#pragma once

#include "rfsbound/models.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfsbound {

/// Detection pattern of scans 1..k. Bit j set <=> scan j+1 produced a
/// detection, so appending an empty scan keeps the code and appending a
/// detection adds 2^k.
struct PatternIndex {
  int k = 0;
  std::uint32_t code = 0;

  bool last_was_detection() const { return k > 0 && ((code >> (k - 1)) & 1u) != 0; }
  PatternIndex on_empty() const { return {k + 1, code}; }
  PatternIndex on_detection() const { return {k + 1, code | (std::uint32_t{1} << k)}; }
  /// 1-based sequence number n of the observation-sets ordering.
  std::uint64_t sequence_number() const { return std::uint64_t{code} + 1; }
};

class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error("DomainError: " + what) {}
};

/// Scalar state carried by one pattern at scan k.
struct SequenceNode {
  double prob = 0.0;          ///< Pr(pattern)
  double p_empty_next = 1.0;  ///< p(Z_{k+1} empty | pattern)
  double rho = 0.0;           ///< Pr(X_k empty, pattern); 0 for detection-ended patterns
};

struct NodeChildren {
  SequenceNode on_empty;
  SequenceNode on_detection;
};

struct SequenceLayer {
  int k = 0;
  std::vector<double> prob;
  std::vector<double> p_empty_next;
  std::vector<double> rho;

  std::size_t size() const { return prob.size(); }
  SequenceNode node(std::size_t code) const { return {prob[code], p_empty_next[code], rho[code]}; }
  /// Fixed-order compensated sum of the pattern probabilities.
  double total_probability() const;
};

/// Conditional probability that scan k+1 is empty given a pattern whose own
/// empty-probability was `p_prev` (ignored when the pattern ended in a
/// detection).
double gamma(double p_prev, const BernoulliParams& params, bool last_was_detection);

/// The two scan-1 patterns (codes 0 and 1).
NodeChildren root_nodes(const BernoulliParams& params);

/// Children of a node: the empty-appended child and the detection-appended one.
NodeChildren split(const SequenceNode& parent, const BernoulliParams& params);

SequenceLayer init_layer(const BernoulliParams& params);
SequenceLayer advance(const SequenceLayer& layer, const BernoulliParams& params);

/// Direct joint-probability summation over every existence path and every
/// detection pattern (4^k terms). p_empty_next is NaN for zero-probability
/// patterns, where the conditional is undefined.
SequenceLayer brute_force_layer(const BernoulliParams& params, int k);

}  // namespace rfsbound
