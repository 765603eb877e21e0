#include <cmath>
#include <sstream>

#include "litefat/errors.hpp"
#include "litefat/model.hpp"

namespace litefat::model {

AdamState AdamState::init(const ModelConfig& config, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  ModelParams shape = zeros_like(config);
  for (const TensorRef& ref : tensor_refs(shape)) {
    state.m.emplace_back(ref.values->size(), 0.0);
    state.v.emplace_back(ref.values->size(), 0.0);
  }
  return state;
}

void adam_step(ModelParams& params, ModelParams& grads, AdamState& state) {
  const auto p_refs = tensor_refs(params);
  const auto g_refs = tensor_refs(grads);
  if (p_refs.size() != g_refs.size() || p_refs.size() != state.m.size())
    throw ShapeError("adam_step: parameter, gradient and state tensor counts "
                     "disagree");

  ++state.step;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < p_refs.size(); ++i) {
    std::vector<double>& p = *p_refs[i].values;
    const std::vector<double>& g = *g_refs[i].values;
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    if (p.size() != g.size() || p.size() != m.size()) {
      std::ostringstream msg;
      msg << "adam_step: tensor " << p_refs[i].name << " has " << p.size()
          << " elements but the gradient has " << g.size();
      throw ShapeError(msg.str());
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      p[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace litefat::model
