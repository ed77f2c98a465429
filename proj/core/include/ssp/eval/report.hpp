#pragma once

#include <string>
#include <vector>

#include "ssp/eval/evaluate.hpp"

namespace ssp::eval {

// JSON object with "model", "config", "pairs" and "aggregate" blocks.
std::string report_json(const MetricReport& report);
MetricReport parse_report_json(const std::string& text);

// Header plus one row per report: model, HE@1, HE@3, HE@5, Rep., MLE, NN mAP, M.S.
std::string reports_csv(const std::vector<MetricReport>& reports);

// Indices of reports ordered by M.S. descending, then Rep. descending, then
// MLE ascending; stable for full ties.
std::vector<std::size_t> rank_reports(const std::vector<MetricReport>& reports);

// Plain-text ranking table with the winner marked.
std::string ranking_table(const std::vector<MetricReport>& reports);

}  // namespace ssp::eval
