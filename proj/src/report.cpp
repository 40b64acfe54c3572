#include "feasproj/report.hpp"

#include <algorithm>

#include <json.hpp>

namespace feasproj {

using nlohmann::json;

const char* backend_name(Backend b) { return b == Backend::nlp ? "nlp" : "sdp"; }

Backend backend_from_name(const std::string& s) {
  if (s == "nlp") return Backend::nlp;
  if (s == "sdp") return Backend::sdp;
  throw std::runtime_error("unknown backend: " + s);
}

std::vector<std::string> nonzero_slack_names(const StageReport& report, double tol) {
  if (report.slack_values.size() == 0 && report.point.size() == 0)
    throw PointUnavailable();
  std::vector<std::pair<double, std::string>> hits;
  for (Index i = 0; i < report.slack_values.size(); ++i)
    if (report.slack_values[i] > tol)
      hits.emplace_back(report.slack_values[i], report.slack_names[i]);
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<std::string> names;
  names.reserve(hits.size());
  for (auto& h : hits) names.push_back(std::move(h.second));
  return names;
}

void write_report(const std::string& instance, NormKind norm,
                  const std::vector<StageReport>& reports,
                  const AlphaCertificate* certificate, std::ostream& sink) {
  if (reports.empty()) throw IoFailure("no stage reports to write");
  json j;
  j["instance"] = instance;
  j["norm"] = norm_name(norm);
  j["stages"] = json::array();
  for (const auto& r : reports) {
    json s;
    s["stage"] = static_cast<int>(r.stage);
    s["status"] = r.status;
    s["slack_norm"] = r.slack_norm;
    s["objective"] = r.objective;
    s["point_file"] = r.point_file;
    s["nonzero_slacks"] = json::array();
    for (Index i = 0; i < r.slack_values.size(); ++i)
      if (r.slack_values[i] > 1e-6)
        s["nonzero_slacks"].push_back(
            {{"name", r.slack_names[i]}, {"value", r.slack_values[i]}});
    s["wall_ms"] = r.wall_ms;
    if (r.lb) s["lb"] = *r.lb;
    if (r.budget) s["budget"] = *r.budget;
    j["stages"].push_back(std::move(s));
  }
  if (certificate) {
    j["certificate"] = {{"alpha", certificate->alpha},
                        {"beta", certificate->beta},
                        {"gamma", certificate->gamma},
                        {"alpha0", certificate->alpha0},
                        {"certified", certificate->certified}};
  }
  sink << j.dump(2) << "\n";
  if (!sink) throw IoFailure("failed writing report");
}

}  // namespace feasproj
