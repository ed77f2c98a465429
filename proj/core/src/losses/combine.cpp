#include "ssp/losses/combine.hpp"

#include <cmath>

#include "ssp/autodiff/ops.hpp"

namespace ssp::loss {

void LossWeights::validate() const {
  if (detector < 0) throw ConfigError("loss.detector_weight", "must be >= 0");
  if (lambda < 0) throw ConfigError("loss.lambda", "must be >= 0");
  if (semantic < 0) throw ConfigError("loss.semantic_weight", "must be >= 0");
}

template <class T>
ad::Tensor<T> uniform_total(const TaskLosses<T>& l, const LossWeights& w) {
  w.validate();
  auto total = ad::add(ad::scale(ad::add(l.detector1, l.detector2), w.detector), ad::scale(l.descriptor, w.lambda));
  if (l.has_semantic()) total = ad::add(total, ad::scale(ad::add(l.semantic1, l.semantic2), w.semantic));
  return total;
}

template <class T>
UncertaintyParams<T> UncertaintyParams<T>::make(double d, double desc, double s) {
  UncertaintyParams p;
  p.eta_detector = ad::Tensor<T>::scalar(static_cast<T>(d), true);
  p.eta_descriptor = ad::Tensor<T>::scalar(static_cast<T>(desc), true);
  p.eta_semantic = ad::Tensor<T>::scalar(static_cast<T>(s), true);
  p.eta_detector.set_name("mtl.eta_detector");
  p.eta_descriptor.set_name("mtl.eta_descriptor");
  p.eta_semantic.set_name("mtl.eta_semantic");
  return p;
}

template <class T>
bool UncertaintyParams<T>::finite() const {
  return std::isfinite(eta_detector.item()) && std::isfinite(eta_descriptor.item()) &&
         std::isfinite(eta_semantic.item());
}

template <class T>
ad::Tensor<T> uncertainty_total(const TaskLosses<T>& l, const UncertaintyParams<T>& eta) {
  auto total = ad::add(ad::mul(ad::add(l.detector1, l.detector2), ad::exp(eta.eta_detector)),
                       ad::mul(ad::scale(l.descriptor, 0.5), ad::exp(eta.eta_descriptor)));
  total = ad::add(total, ad::add(eta.eta_detector, ad::scale(eta.eta_descriptor, 0.5)));
  if (l.has_semantic()) {
    total = ad::add(total, ad::mul(ad::add(l.semantic1, l.semantic2), ad::exp(eta.eta_semantic)));
    total = ad::add(total, eta.eta_semantic);
  }
  return total;
}

template struct UncertaintyParams<float>;
template struct UncertaintyParams<double>;
template ad::Tensor<float> uniform_total<float>(const TaskLosses<float>&, const LossWeights&);
template ad::Tensor<double> uniform_total<double>(const TaskLosses<double>&, const LossWeights&);
template ad::Tensor<float> uncertainty_total<float>(const TaskLosses<float>&, const UncertaintyParams<float>&);
template ad::Tensor<double> uncertainty_total<double>(const TaskLosses<double>&, const UncertaintyParams<double>&);

}  // namespace ssp::loss
