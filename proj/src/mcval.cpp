#include "rfsbound/mcval.hpp"

#include "rfsbound/parallel.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <random>

namespace rfsbound {

namespace {

constexpr double kNormalizationSlack = 1e-10;

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t count,
                                             Rng& rng) {
  std::vector<std::size_t> idx(count);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = 1.0 / static_cast<double>(count);
  double u = unit(rng) * step;
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    while (u > cumulative && j + 1 < weights.size()) {
      ++j;
      cumulative += weights[j];
    }
    idx[i] = j;
    u += step;
  }
  return idx;
}

StateMat weighted_covariance(const ParticleVec& particles, const std::vector<double>& weights) {
  StateVec mean = StateVec::Zero();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    mean += weights[i] * particles[i];
  }
  StateMat cov = StateMat::Zero();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const StateVec d = particles[i] - mean;
    cov += weights[i] * d * d.transpose();
  }
  return symmetrized(cov);
}

void normalize(std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) {
    x /= total;
  }
}

Rng run_stream(std::uint64_t seed, std::uint64_t run) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
  return Rng(seq);
}

}  // namespace

double BernoulliPosterior::effective_sample_size() const {
  double sq = 0.0;
  for (double w : weights) {
    sq += w * w;
  }
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

double predicted_empty_probability(double q_exist, double pd) {
  return (1.0 - pd) + pd * (1.0 - q_exist);
}

double absence_posterior(double p_empty_prior, double pd) {
  return p_empty_prior / ((1.0 - pd) + pd * p_empty_prior);
}

BernoulliPosterior initial_posterior(const GaussianDensity& prior, double b, const FilterConfig& config,
                                     Rng& rng) {
  BernoulliPosterior post;
  post.q_exist = b;
  const NormalSampler<kStateDim> draw(prior.cov);
  post.particles.reserve(config.particles);
  for (std::size_t i = 0; i < config.particles; ++i) {
    post.particles.push_back(prior.mean + draw(rng));
  }
  post.weights.assign(config.particles, 1.0 / static_cast<double>(config.particles));
  return post;
}

BernoulliPosterior bpf_predict(const BernoulliPosterior& post, const BernoulliParams& params,
                               const ScanModel& model, const GaussianDensity& birth,
                               const FilterConfig& config, Rng& rng, bool existence_transition) {
  const std::size_t n_total = config.particles;
  const double q = post.q_exist;
  const double w_survive = existence_transition ? params.r * q : q;
  const double w_birth = existence_transition ? (1.0 - params.r) * (1.0 - q) : 0.0;
  const double q_next = w_survive + w_birth;

  std::size_t n_birth = 0;
  if (w_birth > 0.0) {
    if (w_survive <= 0.0) {
      n_birth = n_total;
    } else {
      const auto floor_count = static_cast<std::size_t>(std::ceil(config.birth_floor * static_cast<double>(n_total)));
      const auto share = static_cast<std::size_t>(std::llround(static_cast<double>(n_total) * w_birth / q_next));
      n_birth = std::clamp(std::max(share, floor_count), std::size_t{1}, n_total - 1);
    }
  }
  const std::size_t n_survive = n_total - n_birth;

  BernoulliPosterior out;
  out.q_exist = std::clamp(q_next, 0.0, 1.0);
  out.particles.reserve(n_total);
  out.weights.reserve(n_total);

  if (n_survive > 0) {
    ParticleVec survivors;
    std::vector<double> weights;
    const bool resample = n_survive != post.particles.size() ||
                          post.effective_sample_size() < 0.5 * static_cast<double>(n_total);
    if (resample) {
      const std::vector<std::size_t> idx = systematic_resample(post.weights, n_survive, rng);
      survivors.reserve(n_survive);
      for (std::size_t i : idx) {
        survivors.push_back(post.particles[i]);
      }
      weights.assign(n_survive, 1.0 / static_cast<double>(n_survive));
      if (config.regularize) {
        const double d = kStateDim;
        const double h = std::pow(4.0 / (static_cast<double>(n_survive) * (d + 2.0)), 1.0 / (d + 4.0));
        const NormalSampler<kStateDim> jitter(h * h * weighted_covariance(post.particles, post.weights));
        for (StateVec& x : survivors) {
          x += jitter(rng);
        }
      }
    } else {
      survivors = post.particles;
      weights = post.weights;
    }
    const NormalSampler<kStateDim> noise(model.lg.q_mat);
    const double share = q_next > 0.0 ? w_survive / q_next : 1.0;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      out.particles.push_back(model.lg.f_mat * survivors[i] - model.offset + noise(rng));
      out.weights.push_back(weights[i] * share);
    }
  }
  if (n_birth > 0) {
    const NormalSampler<kStateDim> draw(birth.cov);
    const double each = (w_birth / q_next) / static_cast<double>(n_birth);
    for (std::size_t i = 0; i < n_birth; ++i) {
      out.particles.push_back(birth.mean + draw(rng));
      out.weights.push_back(each);
    }
  }
  normalize(out.weights);
  return out;
}

BernoulliPosterior bpf_update(const BernoulliPosterior& post, const std::optional<MeasVec>& z,
                              const BernoulliParams& params, const ScanModel& model) {
  BernoulliPosterior out = post;
  const double pd = params.pd;
  const double q = post.q_exist;
  if (!z) {
    // Present-and-missed against absent; the state density is unchanged
    // because the miss probability does not depend on x.
    const double present = (1.0 - pd) * q;
    const double absent = 1.0 - q;
    const double norm = present + absent;
    out.q_exist = present / norm;
    const double closed_form = absence_posterior(1.0 - q, pd);
    if (std::abs((1.0 - out.q_exist) - closed_form) > kNormalizationSlack) {
      throw std::logic_error("empty-scan normalization disagrees with the closed form");
    }
    return out;
  }
  if (q <= 0.0) {
    throw DegenerateWeights("detection received with zero predicted existence");
  }
  const Eigen::MatrixXd r_inv = invert_spd(model.lg.r_mat);
  std::vector<double> log_lik(post.particles.size(), -INFINITY);
  double best = -INFINITY;
  for (std::size_t i = 0; i < post.particles.size(); ++i) {
    if (post.weights[i] <= 0.0) {
      continue;
    }
    const MeasVec d = model.residual(*z, post.particles[i]);
    log_lik[i] = -0.5 * d.dot(r_inv * d);
    best = std::max(best, log_lik[i]);
  }
  if (!(best >= std::log(DBL_MIN))) {
    throw DegenerateWeights("every particle likelihood underflows");
  }
  for (std::size_t i = 0; i < out.weights.size(); ++i) {
    out.weights[i] = post.weights[i] * std::exp(log_lik[i] - best);
  }
  normalize(out.weights);
  out.q_exist = 1.0;
  return out;
}

std::optional<StateVec> extract_estimate(const BernoulliPosterior& post, double threshold) {
  if (post.q_exist < threshold || post.particles.empty()) {
    return std::nullopt;
  }
  StateVec mean = StateVec::Zero();
  for (std::size_t i = 0; i < post.particles.size(); ++i) {
    mean += post.weights[i] * post.particles[i];
  }
  return mean;
}

StateVec set_error(const std::optional<StateVec>& truth, const std::optional<StateVec>& est,
                   const BernoulliParams& params) {
  if (truth && est) {
    return *truth - *est;
  }
  if (est) {
    return params.e0;
  }
  if (truth) {
    return params.e1;
  }
  return StateVec::Zero();
}

RunResult simulate_run(const ScenarioSpec& spec, int k_max, const FilterConfig& config,
                       std::uint64_t seed, std::uint64_t run) {
  spec.validate();
  Rng rng = run_stream(seed, run);
  const BernoulliParams& params = spec.params;
  const GaussianDensity prior = spec.prior();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::optional<StateVec> truth;
  if (unit(rng) < params.b) {
    truth = prior.mean + NormalSampler<kStateDim>(prior.cov)(rng);
  }
  BernoulliPosterior post = initial_posterior(prior, params.b, config, rng);

  // Existence is fixed between scan 0 and scan 1; only the state moves.
  BernoulliParams keep = params;
  keep.r = 1.0;

  RunResult result;
  for (int k = 1; k <= k_max; ++k) {
    const ScanModel model = scan_models(spec, k);
    truth = sample_transition(truth, k == 1 ? keep : params, model, prior, rng);
    const std::optional<MeasVec> z = sample_measurement(truth, params, model, rng);
    post = bpf_predict(post, params, model, prior, config, rng, k >= 2);
    try {
      post = bpf_update(post, z, params, model);
    } catch (const DegenerateWeights&) {
      result.degenerate = true;
      std::fill(post.weights.begin(), post.weights.end(), 1.0 / static_cast<double>(post.weights.size()));
      post.q_exist = 1.0;
    }
    const std::optional<StateVec> est = extract_estimate(post, config.threshold);
    result.errors.push_back(set_error(truth, est, params));
    result.truth_cardinality.push_back(truth ? 1 : 0);
    result.estimate_cardinality.push_back(est ? 1 : 0);
  }
  return result;
}

MonteCarloSeries empirical_mse(const ScenarioSpec& spec, int k_max, std::size_t n_runs,
                               std::uint64_t seed, const FilterConfig& config) {
  if (n_runs < 1) {
    throw std::invalid_argument("empirical_mse: n_runs must be >= 1");
  }
  if (k_max < 1 || k_max > spec.scans) {
    throw std::out_of_range("k_max must be in [1, scans]");
  }
  std::vector<RunResult> results(n_runs);
  parallel_chunks(n_runs, 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = simulate_run(spec, k_max, config, seed, i);
    }
  });

  MonteCarloSeries out;
  out.runs = n_runs;
  for (const RunResult& r : results) {
    out.degenerate_runs += r.degenerate ? 1 : 0;
  }
  const double n = static_cast<double>(n_runs);
  for (int k = 1; k <= k_max; ++k) {
    MonteCarloScan scan;
    scan.k = k;
    double sum_tr = 0.0;
    double sum_tr2 = 0.0;
    for (const RunResult& r : results) {
      const StateVec& e = r.errors[static_cast<std::size_t>(k - 1)];
      scan.mse += e * e.transpose();
      const double tr = e.squaredNorm();
      sum_tr += tr;
      sum_tr2 += tr * tr;
    }
    scan.mse /= n;
    scan.trace = sum_tr / n;
    const double var = n > 1.0 ? std::max(0.0, (sum_tr2 - n * scan.trace * scan.trace) / (n - 1.0)) : 0.0;
    scan.trace_se = std::sqrt(var / n);
    scan.rmse = scan.mse.diagonal().cwiseSqrt();
    out.per_scan.push_back(scan);
  }
  return out;
}

}  // namespace rfsbound
