#include "rfsbound/fim.hpp"

namespace rfsbound {

FimStep FimStep::from(const ScanModel& model) {
  FimStep step;
  step.f = model.lg.f_mat;
  step.q = model.lg.q_mat;
  step.noiseless = model.lg.noiseless;
  step.measurement_info = model.measurement_information();
  if (step.noiseless) {
    Eigen::FullPivLU<StateMat> lu(step.f);
    if (!lu.isInvertible()) {
      throw SingularF();
    }
    step.f_inv = lu.inverse();
  }
  return step;
}

FimChildren FimStep::split(const StateMat& parent) const {
  if (noiseless) {
    const StateMat moved = symmetrized(StateMat(f_inv.transpose() * parent * f_inv));
    return {moved, symmetrized(StateMat(moved + measurement_info))};
  }
  const StateMat predicted = fim_predict<double, kStateDim>(parent, f, q);
  return {predicted, symmetrized(StateMat(predicted + measurement_info))};
}

FimLayer initial_fim_layer(const StateMat& prior_cov) {
  FimLayer layer;
  layer.k = 0;
  layer.fims.push_back(initial_fim<double, kStateDim>(prior_cov));
  return layer;
}

FimLayer advance_fim_layer(const FimLayer& layer, const ScanModel& model) {
  const FimStep step = FimStep::from(model);
  const std::size_t n = layer.fims.size();
  FimLayer next;
  next.k = layer.k + 1;
  next.fims.resize(2 * n);
  for (std::size_t m = 0; m < n; ++m) {
    const FimChildren c = step.split(layer.fims[m]);
    next.fims[m] = c.on_empty;
    next.fims[m + n] = c.on_detection;
  }
  return next;
}

}  // namespace rfsbound
