#pragma once

#include <cstddef>
#include <span>

#include "ssp/eval/evaluate.hpp"

namespace ssp::pipeline {

// Highest matching score, then higher repeatability, then lower MLE; exact
// ties keep the earliest entry. Throws ssp::Error on an empty list.
std::size_t select_best(std::span<const eval::Aggregate> results);

template <class C>
const C& select_best(std::span<const C> checkpoints, std::span<const eval::Aggregate> results) {
  if (checkpoints.size() != results.size()) throw Error("select_best needs one result per checkpoint");
  return checkpoints[select_best(results)];
}

// Detector-only ranking used during pretraining: higher repeatability,
// then lower MLE, then the earliest entry.
std::size_t select_best_repeatability(std::span<const eval::Aggregate> results);

}  // namespace ssp::pipeline
