#include "rfsbound/bound.hpp"

#include <doctest.h>

#include <cmath>

using namespace rfsbound;

namespace {

double rel_err(const StateMat& a, const StateMat& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

ScenarioSpec linear(double b, double r, double pd, int scans = 10) {
  ScenarioSpec s = linear_default();
  s.scans = scans;
  s.params.b = b;
  s.params.r = r;
  s.params.pd = pd;
  return s;
}

// Materialized layers: seqtree + fim + per-pattern assembly, scan by scan.
std::vector<StateMat, Eigen::aligned_allocator<StateMat>> layered_totals(const ScenarioSpec& spec, int k_max) {
  std::vector<StateMat, Eigen::aligned_allocator<StateMat>> out;
  SequenceLayer seq = init_layer(spec.params);
  FimLayer fims = advance_fim_layer(initial_fim_layer(spec.prior_cov()), scan_models(spec, 1));
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) {
      seq = advance(seq, spec.params);
      fims = advance_fim_layer(fims, scan_models(spec, k));
    }
    out.push_back(total_bound(assemble_bound_layer(seq, fims, spec.params)));
  }
  return out;
}

}  // namespace

TEST_CASE("bound_empty_branch") {
  BernoulliParams p;
  p.e0 = p.e1 = StateVec(100, 5, 100, 5);
  const StateMat j = StateMat::Identity();

  BranchBound bb = bound_empty_branch(j, 0.3, 0.3, p);
  CHECK(bb.branch == Branch::Star);
  CHECK(bb.p.isZero());

  bb = bound_empty_branch(j, 0.3, 0.0, p);
  CHECK(bb.branch == Branch::DoubleStar);
  CHECK(rel_err(bb.p, StateMat(0.3 * StateMat::Identity())) < 1e-15);

  // Tie goes to DoubleStar.
  BernoulliParams tie;
  tie.e1 = StateVec(1, 1, 1, 1);
  tie.e0 = StateVec::Zero();
  CHECK(bound_empty_branch(StateMat::Identity(), 0.5, 0.0, tie).branch == Branch::DoubleStar);
}

TEST_CASE("bound_empty_branch: hand computation at scan 1") {
  const ScenarioSpec s = linear(1, 0.9, 0.8);
  const SequenceLayer l1 = init_layer(s.params);
  const FimLayer f1 = advance_fim_layer(initial_fim_layer(s.prior_cov()), scan_models(s, 1));
  const double pr = l1.prob[0];
  const double rho = l1.rho[0];
  const StateMat star = outer(s.params.e1) * (pr - rho);
  const StateMat dstar = outer(s.params.e0) * rho + f1.fims[0].inverse() * pr;
  const bool pick_star = star.trace() < dstar.trace();
  const BranchBound bb = bound_empty_branch(f1.fims[0], pr, rho, s.params);
  CHECK((bb.branch == Branch::Star) == pick_star);
  CHECK(rel_err(bb.p, pick_star ? star : dstar) < 1e-12);
}

TEST_CASE("bound_detection_branch") {
  CHECK(bound_detection_branch(StateMat::Identity(), 0.0).isZero());
  CHECK(rel_err(bound_detection_branch(StateMat::Identity(), 0.5), StateMat(0.5 * StateMat::Identity())) < 1e-15);

  const ScenarioSpec s = linear_default();
  const ScanModel m = scan_models(s, 1);
  const StateMat p0 = s.prior_cov();
  const StateMat pp = m.lg.f_mat * p0 * m.lg.f_mat.transpose() + m.lg.q_mat;
  const Eigen::MatrixXd gain = pp * m.lg.h_mat.transpose() * (m.lg.h_mat * pp * m.lg.h_mat.transpose() + m.lg.r_mat).inverse();
  const StateMat kf = (StateMat::Identity() - gain * m.lg.h_mat) * pp;
  const FimLayer f1 = advance_fim_layer(initial_fim_layer(p0), m);
  CHECK(rel_err(bound_detection_branch(f1.fims[1], 0.8), StateMat(0.8 * kf)) < 1e-9);
}

TEST_CASE("total_bound") {
  BoundLayer one;
  one.per_seq.push_back(StateMat::Identity());
  CHECK(total_bound(one).isIdentity());

  const SequenceLayer l = advance(advance(init_layer(linear(0.3, 0.7, 0.6).params), linear(0.3, 0.7, 0.6).params),
                                  linear(0.3, 0.7, 0.6).params);
  BoundLayer scaled;
  const StateMat c = StateVec(4, 3, 2, 1).asDiagonal();
  for (double pr : l.prob) {
    scaled.per_seq.push_back(pr * c);
  }
  CHECK(rel_err(total_bound(scaled), c) < 1e-14);
}

TEST_CASE("rmse_components") {
  Eigen::MatrixXd p = Eigen::Vector2d(4, 9).asDiagonal();
  const Eigen::VectorXd v = rmse_components(p, {0, 1});
  CHECK(v[0] == 2.0);
  CHECK(v[1] == 3.0);
  CHECK(rmse_components(StateMat(StateMat::Zero())).isZero());
  CHECK_THROWS(rmse_components(p, {2}));
}

TEST_CASE("fused pipeline equals the materialized layers") {
  for (const ScenarioSpec& s : {linear(1, 1, 0.8), linear(1, 0.9, 0.7), linear(0.3, 0.95, 0.9)}) {
    const BoundSeries fused = rfs_bound_series(s, 8);
    const auto layered = layered_totals(s, 8);
    for (int k = 1; k <= 8; ++k) {
      CHECK(rel_err(fused.per_scan[k - 1].total, layered[k - 1]) < 1e-12);
    }
  }
  ScenarioSpec b = bearings_default();
  b.params.r = 0.9;
  const BoundSeries fused = rfs_bound_series(b, 8);
  const auto layered = layered_totals(b, 8);
  for (int k = 1; k <= 8; ++k) {
    CHECK(rel_err(fused.per_scan[k - 1].total, layered[k - 1]) < 1e-12);
  }
}

TEST_CASE("rfs equals enum exactly when every empty-ended node takes DoubleStar") {
  // Doubled cardinality errors with certain existence: DoubleStar wins
  // everywhere in the first six scans.
  ScenarioSpec s = linear(1, 1, 0.8);
  s.set_cardinality_errors(2.0);
  const BoundSeries rfs = rfs_bound_series(s, 10);
  const BoundSeries en = enum_pcrlb_series(s, 10);
  for (int k = 1; k <= 10; ++k) {
    const ScanBound& a = rfs.per_scan[k - 1];
    CHECK(a.max_rho == 0.0);
    if (a.star == 0) {
      CHECK(rel_err(a.total, en.per_scan[k - 1].total) < 1e-9);
    }
  }
  for (int k = 1; k <= 6; ++k) {
    CHECK(rfs.per_scan[k - 1].star == 0);
  }
}

TEST_CASE("branch consistency: rho = 0 and trace(e1 e1^T) >= trace(J^-1) selects DoubleStar") {
  const ScenarioSpec s = linear(1, 1, 0.8);
  SequenceLayer seq = init_layer(s.params);
  FimLayer fims = advance_fim_layer(initial_fim_layer(s.prior_cov()), scan_models(s, 1));
  for (int k = 1; k <= 8; ++k) {
    if (k > 1) {
      seq = advance(seq, s.params);
      fims = advance_fim_layer(fims, scan_models(s, k));
    }
    const BoundLayer bl = assemble_bound_layer(seq, fims, s.params);
    for (std::size_t n = 0; n < seq.size() / 2; ++n) {
      if (seq.rho[n] == 0.0 && trace(outer(s.params.e1)) >= trace(invert_spd(fims.fims[n]))) {
        CHECK(bl.selected_branch[n] == Branch::DoubleStar);
      }
    }
  }
}

TEST_CASE("larger cardinality errors never decrease the total bound") {
  for (const ScenarioSpec& base : {linear(1, 0.9, 0.8), linear(0.5, 0.95, 0.7)}) {
    double previous = 0.0;
    for (double scale : {1.0, 1.5, 2.0, 4.0}) {
      ScenarioSpec s = base;
      s.set_cardinality_errors(scale);
      const BoundSeries series = rfs_bound_series(s, 8);
      const double tr = trace(series.per_scan.back().total);
      CHECK(tr >= previous * (1.0 - 1e-12));
      previous = tr;
    }
  }
}

TEST_CASE("enum_pcrlb_series") {
  // Near-certain detection collapses the enumeration onto the all-detect pattern.
  ScenarioSpec s = linear(1, 1, 0.999999);
  const BoundSeries en = enum_pcrlb_series(s, 6);
  StateMat j = initial_fim<double, 4>(s.prior_cov());
  for (int k = 1; k <= 6; ++k) {
    const ScanModel m = scan_models(s, k);
    j = fim_update<double, 4>(j, m.lg.f_mat, m.lg.q_mat, m.lg.h_mat, m.lg.r_mat);
    CHECK(rel_err(en.per_scan[k - 1].total, StateMat(j.inverse())) < 1e-4);
  }

  const BoundSeries lin = enum_pcrlb_series(linear(1, 1, 0.8), 10);
  for (int k = 2; k <= 10; ++k) {
    CHECK(lin.per_scan[k - 1].rmse[0] <= lin.per_scan[k - 2].rmse[0]);
  }
  // The comparator ignores b and r.
  const BoundSeries other = enum_pcrlb_series(linear(0.2, 0.6, 0.8), 10);
  for (int k = 1; k <= 10; ++k) {
    CHECK(other.per_scan[k - 1].total == lin.per_scan[k - 1].total);
  }
}

TEST_CASE("series invariants") {
  for (const ScenarioSpec& s : {linear(1, 0.9, 0.8, 12), linear(0.1, 0.5, 0.3, 12)}) {
    const BoundSeries series = rfs_bound_series(s, 12);
    for (const ScanBound& scan : series.per_scan) {
      CHECK(std::abs(scan.prob_sum - 1.0) <= 1e-12);
      CHECK(scan.psd_failures == 0);
      CHECK(scan.rmse.allFinite());
      CHECK(scan.nodes == (std::size_t{1} << scan.k));
      CHECK(scan.star + scan.double_star + scan.detection == scan.nodes);
      CHECK(scan.mass_kept == 1.0);
    }
  }
}

TEST_CASE("pruning reports the dropped mass") {
  PipelineOptions opt;
  opt.prune_eps = 1e-6;
  const ScenarioSpec s = linear(1, 0.9, 0.8, 14);
  const BoundSeries pruned = rfs_bound_series(s, 14, opt);
  for (const ScanBound& scan : pruned.per_scan) {
    CHECK(std::abs(scan.prob_sum + (1.0 - scan.mass_kept) - 1.0) <= 1e-12);
  }
  CHECK(pruned.per_scan.back().nodes < (std::size_t{1} << 14));
  CHECK(pruned.dropped_mass() > 0.0);
  CHECK(pruned.dropped_mass() < 0.1);
}

TEST_CASE("budget and cap") {
  const ScenarioSpec s = linear_default();
  PipelineOptions opt;
  opt.memory_budget = 100 * bytes_per_node();
  CHECK_THROWS_AS(rfs_bound_series(s, 7, opt), CapExceeded);
  CHECK_NOTHROW(rfs_bound_series(s, 6, opt));
  opt = PipelineOptions{};
  opt.max_scans = 5;
  CHECK_THROWS_AS(rfs_bound_series(s, 6, opt), CapExceeded);
  CHECK_THROWS(rfs_bound_series(s, 11));
}

TEST_CASE("thread count does not change the result") {
  ScenarioSpec s = bearings_default();
  s.params.r = 0.9;
  setenv("RFS_BOUND_THREADS", "1", 1);
  const BoundSeries one = rfs_bound_series(s, 14);
  setenv("RFS_BOUND_THREADS", "4", 1);
  const BoundSeries four = rfs_bound_series(s, 14);
  unsetenv("RFS_BOUND_THREADS");
  for (std::size_t i = 0; i < one.per_scan.size(); ++i) {
    CHECK(one.per_scan[i].total == four.per_scan[i].total);
  }
}
