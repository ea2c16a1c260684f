#include <cmath>
#include <set>

#include "spoofsmith/optim.hpp"

namespace spoofsmith {

template <typename T>
AdamState<T> AdamState<T>::for_params(const std::map<std::string, Tensor<T>>& params) {
  AdamState state;
  for (const auto& [name, p] : params) state.moments[name] = {Tensor<T>::zeros(p.shape()), Tensor<T>::zeros(p.shape())};
  return state;
}

template <typename T>
void adam_step(std::map<std::string, Tensor<T>>& params, const GradientMap<T>& grads, AdamState<T>& state,
               const AdamConfig& config) {
  std::set<std::uint64_t> known;
  for (const auto& [name, p] : params) known.insert(p.id());
  for (const auto& [id, g] : grads) {
    if (!known.count(id)) throw InconsistentStateError("gradient for a tensor that is not an optimized parameter");
  }
  for (const auto& [name, p] : params) {
    const Tensor<T>* g = grads.find(p.id());
    if (!g) continue;
    auto it = state.moments.find(name);
    if (it == state.moments.end()) throw InconsistentStateError("no Adam state for parameter '" + name + "'");
    if (it->second.m.shape() != p.shape() || it->second.v.shape() != p.shape() || g->shape() != p.shape()) {
      throw InconsistentStateError("Adam state shape mismatch for parameter '" + name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(config.beta1, t));
  const T bc2 = static_cast<T>(1.0 - std::pow(config.beta2, t));
  const T lr = static_cast<T>(config.learning_rate), eps = static_cast<T>(config.eps);
  for (auto& [name, p] : params) {
    const Tensor<T>* g = grads.find(p.id());
    if (!g) continue;
    auto& mom = state.moments.at(name);
    auto pd = p.mutable_data();
    auto md = mom.m.mutable_data();
    auto vd = mom.v.mutable_data();
    auto gd = g->data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = b1 * md[i] + (T(1) - b1) * gd[i];
      vd[i] = b2 * vd[i] + (T(1) - b2) * gd[i] * gd[i];
      const T m_hat = md[i] / bc1;
      const T v_hat = vd[i] / bc2;
      pd[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::map<std::string, Tensor<float>>&, const GradientMap<float>&, AdamState<float>&,
                        const AdamConfig&);
template void adam_step(std::map<std::string, Tensor<double>>&, const GradientMap<double>&, AdamState<double>&,
                        const AdamConfig&);

}  // namespace spoofsmith
