#include "ssp/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace ssp::eval {
namespace {

using nlohmann::ordered_json;

ordered_json optional_value(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> read_optional(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string report_json(const MetricReport& r) {
  ordered_json j;
  j["model"] = r.model;
  j["config"] = {{"top_k", r.config.top_k},
                 {"nms_radius", r.config.nms_radius},
                 {"detection_threshold", r.config.detection_threshold},
                 {"epsilon", r.config.epsilon},
                 {"he_thresholds", r.config.he_thresholds},
                 {"seed", r.config.seed}};
  ordered_json pairs = ordered_json::array();
  for (const auto& m : r.pairs) {
    pairs.push_back({{"index", m.index},
                     {"kind", m.kind == PairKind::Viewpoint ? "viewpoint" : "illumination"},
                     {"keypoints_a", m.keypoints_a},
                     {"keypoints_b", m.keypoints_b},
                     {"repeatability", optional_value(m.repeatability)},
                     {"mle", optional_value(m.mle)},
                     {"nn_map", optional_value(m.nn_map)},
                     {"matching_score", optional_value(m.matching_score)},
                     {"he_correct", m.he_correct},
                     {"corner_error", optional_value(m.corner_error)},
                     {"estimation_failed", m.estimation_failed},
                     {"degenerate_descriptors", m.degenerate_descriptors}});
  }
  j["pairs"] = std::move(pairs);
  j["aggregate"] = {{"HE@1", r.mean.he[0]},
                    {"HE@3", r.mean.he[1]},
                    {"HE@5", r.mean.he[2]},
                    {"repeatability", r.mean.repeatability},
                    {"mle", r.mean.mle},
                    {"nn_map", r.mean.nn_map},
                    {"matching_score", r.mean.matching_score}};
  j["flags"] = {{"repeatability_skipped", r.repeatability_skipped},
                {"mle_excluded", r.mle_excluded},
                {"nn_map_flagged", r.nn_map_flagged},
                {"matching_skipped", r.matching_skipped},
                {"estimation_failures", r.estimation_failures}};
  return j.dump(2) + "\n";
}

MetricReport parse_report_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what(), 0, "json");
  }
  MetricReport r;
  try {
    r.model = j.at("model").get<std::string>();
    const auto& a = j.at("aggregate");
    r.mean.he[0] = a.at("HE@1").get<double>();
    r.mean.he[1] = a.at("HE@3").get<double>();
    r.mean.he[2] = a.at("HE@5").get<double>();
    r.mean.repeatability = a.at("repeatability").get<double>();
    r.mean.mle = a.at("mle").get<double>();
    r.mean.nn_map = a.at("nn_map").get<double>();
    r.mean.matching_score = a.at("matching_score").get<double>();
    if (j.contains("config")) {
      const auto& c = j.at("config");
      r.config.top_k = c.value("top_k", r.config.top_k);
      r.config.nms_radius = c.value("nms_radius", r.config.nms_radius);
      r.config.detection_threshold = c.value("detection_threshold", r.config.detection_threshold);
      r.config.epsilon = c.value("epsilon", r.config.epsilon);
      r.config.seed = c.value("seed", r.config.seed);
    }
    if (j.contains("pairs")) {
      for (const auto& p : j.at("pairs")) {
        PairMetrics m;
        m.index = p.at("index").get<std::size_t>();
        m.kind = p.at("kind").get<std::string>() == "viewpoint" ? PairKind::Viewpoint : PairKind::Illumination;
        m.keypoints_a = p.at("keypoints_a").get<std::size_t>();
        m.keypoints_b = p.at("keypoints_b").get<std::size_t>();
        m.repeatability = read_optional(p, "repeatability");
        m.mle = read_optional(p, "mle");
        m.nn_map = read_optional(p, "nn_map");
        m.matching_score = read_optional(p, "matching_score");
        m.he_correct = p.at("he_correct").get<std::array<bool, 3>>();
        m.corner_error = read_optional(p, "corner_error");
        m.estimation_failed = p.at("estimation_failed").get<bool>();
        m.degenerate_descriptors = p.value("degenerate_descriptors", std::size_t{0});
        r.pairs.push_back(m);
      }
    }
    if (j.contains("flags")) {
      const auto& f = j.at("flags");
      r.repeatability_skipped = f.value("repeatability_skipped", std::size_t{0});
      r.mle_excluded = f.value("mle_excluded", std::size_t{0});
      r.nn_map_flagged = f.value("nn_map_flagged", std::size_t{0});
      r.matching_skipped = f.value("matching_skipped", std::size_t{0});
      r.estimation_failures = f.value("estimation_failures", std::size_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report is missing a field: ") + e.what(), 0, "aggregate");
  }
  return r;
}

std::string reports_csv(const std::vector<MetricReport>& reports) {
  std::string out = "model,HE@1,HE@3,HE@5,Rep.,MLE,NN mAP,M.S.\n";
  for (const auto& r : reports) {
    out += r.model;
    for (double v : {r.mean.he[0], r.mean.he[1], r.mean.he[2], r.mean.repeatability, r.mean.mle, r.mean.nn_map,
                     r.mean.matching_score}) {
      out += "," + fixed(v);
    }
    out += "\n";
  }
  return out;
}

std::vector<std::size_t> rank_reports(const std::vector<MetricReport>& reports) {
  std::vector<std::size_t> order(reports.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = reports[x].mean;
    const auto& b = reports[y].mean;
    if (a.matching_score != b.matching_score) return a.matching_score > b.matching_score;
    if (a.repeatability != b.repeatability) return a.repeatability > b.repeatability;
    return a.mle < b.mle;
  });
  return order;
}

std::string ranking_table(const std::vector<MetricReport>& reports) {
  const auto order = rank_reports(reports);
  std::string out = "rank  model                     M.S.      Rep.      MLE       NN mAP    HE@3\n";
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& r = reports[order[k]];
    char line[256];
    std::snprintf(line, sizeof line, "%-5zu %-25s %-9.4f %-9.4f %-9.4f %-9.4f %-9.4f%s\n", k + 1, r.model.c_str(),
                  r.mean.matching_score, r.mean.repeatability, r.mean.mle, r.mean.nn_map, r.mean.he[1],
                  k == 0 ? "  <- best" : "");
    out += line;
  }
  return out;
}

}  // namespace ssp::eval
