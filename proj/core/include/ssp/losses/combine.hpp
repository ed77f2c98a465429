#pragma once

#include "ssp/autodiff/tensor.hpp"

namespace ssp::loss {

// One scalar per task term; the semantic pair is undefined for Sp models.
template <class T>
struct TaskLosses {
  ad::Tensor<T> detector1, detector2;
  ad::Tensor<T> descriptor;
  ad::Tensor<T> semantic1, semantic2;

  bool has_semantic() const { return semantic1.defined() && semantic2.defined(); }
};

struct LossWeights {
  double detector = 1.0;
  double lambda = 1.0;  // descriptor weight
  double semantic = 1.0;

  void validate() const;
};

// w_d (L_d1 + L_d2) + lambda L_desc [+ w_s (L_s1 + L_s2)].
template <class T>
ad::Tensor<T> uniform_total(const TaskLosses<T>& losses, const LossWeights& weights);

inline constexpr double kInitialEtaDetector = 1.0;
inline constexpr double kInitialEtaDescriptor = 2.0;
inline constexpr double kInitialEtaSemantic = 1.0;

// Learnable scalars eta_i = 2 log sigma_i; rank-0 tracked leaves.
template <class T>
struct UncertaintyParams {
  ad::Tensor<T> eta_detector;
  ad::Tensor<T> eta_descriptor;
  ad::Tensor<T> eta_semantic;

  static UncertaintyParams make(double d = kInitialEtaDetector, double desc = kInitialEtaDescriptor,
                                double s = kInitialEtaSemantic);
  bool finite() const;
};

//   (L_d1 + L_d2) exp(eta_d) + (L_desc / 2) exp(eta_desc) + (L_s1 + L_s2) exp(eta_s)
//     + eta_d + eta_desc / 2 + eta_s
// Without semantic losses both semantic terms (including eta_s) are dropped.
template <class T>
ad::Tensor<T> uncertainty_total(const TaskLosses<T>& losses, const UncertaintyParams<T>& eta);

}  // namespace ssp::loss
