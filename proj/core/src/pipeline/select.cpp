#include "ssp/pipeline/select.hpp"

namespace ssp::pipeline {
namespace {

bool better(const eval::Aggregate& a, const eval::Aggregate& b) {
  if (a.matching_score != b.matching_score) return a.matching_score > b.matching_score;
  if (a.repeatability != b.repeatability) return a.repeatability > b.repeatability;
  return a.mle < b.mle;
}

bool better_repeatability(const eval::Aggregate& a, const eval::Aggregate& b) {
  if (a.repeatability != b.repeatability) return a.repeatability > b.repeatability;
  return a.mle < b.mle;
}

template <class Less>
std::size_t argbest(std::span<const eval::Aggregate> results, Less less) {
  if (results.empty()) throw Error("cannot select from an empty checkpoint set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (less(results[i], results[best])) best = i;
  }
  return best;
}

}  // namespace

std::size_t select_best(std::span<const eval::Aggregate> results) { return argbest(results, better); }

std::size_t select_best_repeatability(std::span<const eval::Aggregate> results) {
  return argbest(results, better_repeatability);
}

}  // namespace ssp::pipeline
