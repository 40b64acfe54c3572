#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "feasproj/pipeline.hpp"

using namespace feasproj;
using nlohmann::json;

namespace {

struct RunSpec {
  std::string case_path;
  std::string perturb;
  std::string norm = "l1";
  std::string backend = "nlp";
  std::string stage3 = "power_flow";
  std::string report_path;
  std::string points_stem;
  double budget_slack = 0.0;
  double feas_tol = 1e-6;
  int max_outer = 200;
  int max_inner = 100;
  bool trace = false;
};

PipelineResult execute(const RunSpec& spec) {
  CaseData cd = parse_case_file(spec.case_path);
  std::optional<Perturbation> pert;
  std::string label = cd.name;
  if (!spec.perturb.empty()) {
    pert = named_perturbation(spec.perturb);
    label += "-" + spec.perturb;
  }
  PipelineOptions opts;
  opts.norm = norm_from_name(spec.norm);
  opts.backend = backend_from_name(spec.backend);
  opts.stage3 = spec.stage3 == "least_squares" ? Stage3Mode::least_squares
                                               : Stage3Mode::power_flow;
  opts.nlp.max_outer_iterations = spec.max_outer;
  opts.nlp.max_inner_iterations = spec.max_inner;
  opts.nlp.feasibility_tol = spec.feas_tol;
  opts.feasibility_tol = spec.feas_tol;
  opts.budget_slack = spec.budget_slack;
  opts.trace = spec.trace;
  opts.point_file_stem = spec.points_stem;
  opts.instance_label = label;
  return run_pipeline(cd, pert, opts);
}

std::string report_string(const PipelineResult& res, NormKind norm, int indent) {
  std::ostringstream os;
  write_report(res.instance, norm, res.stages,
               res.certificate ? &*res.certificate : nullptr, os);
  if (indent >= 0) return os.str();
  // compact single line
  json j = json::parse(os.str());
  return j.dump();
}

int do_run(const RunSpec& spec) {
  PipelineResult res;
  try {
    res = execute(spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  const NormKind norm = norm_from_name(spec.norm);
  if (!spec.report_path.empty()) {
    std::ofstream out(spec.report_path);
    if (!out) {
      std::cerr << "error: cannot open report path " << spec.report_path << "\n";
      return 3;
    }
    write_report(res.instance, norm, res.stages,
                 res.certificate ? &*res.certificate : nullptr, out);
  }
  std::cout << report_string(res, norm, 2);
  return res.exit_code;
}

int do_batch(const std::string& manifest_path, unsigned jobs) {
  std::ifstream in(manifest_path);
  if (!in) {
    std::cerr << "error: cannot open manifest " << manifest_path << "\n";
    return 3;
  }
  json manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_array()) {
    std::cerr << "error: manifest must be a JSON array of run objects\n";
    return 3;
  }
  std::vector<RunSpec> specs;
  for (const auto& item : manifest) {
    RunSpec s;
    s.case_path = item.at("case").get<std::string>();
    if (item.contains("perturb")) s.perturb = item["perturb"].get<std::string>();
    if (item.contains("norm")) s.norm = item["norm"].get<std::string>();
    if (item.contains("backend")) s.backend = item["backend"].get<std::string>();
    if (item.contains("stage3")) s.stage3 = item["stage3"].get<std::string>();
    if (item.contains("report")) s.report_path = item["report"].get<std::string>();
    specs.push_back(std::move(s));
  }
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<std::pair<int, std::string>>> futures(specs.size());
  std::vector<std::pair<int, std::string>> results(specs.size());
  size_t next = 0;
  while (next < specs.size()) {
    const size_t batch_end = std::min(specs.size(), next + jobs);
    for (size_t i = next; i < batch_end; ++i) {
      futures[i] = std::async(std::launch::async, [&specs, i]() {
        try {
          PipelineResult res = execute(specs[i]);
          const std::string line = report_string(res, norm_from_name(specs[i].norm), -1);
          if (!specs[i].report_path.empty()) {
            std::ofstream out(specs[i].report_path);
            if (out)
              write_report(res.instance, norm_from_name(specs[i].norm), res.stages,
                           res.certificate ? &*res.certificate : nullptr, out);
          }
          return std::make_pair(res.exit_code, line);
        } catch (const std::exception& e) {
          return std::make_pair(3, std::string("{\"error\":\"") + e.what() + "\"}");
        }
      });
    }
    for (size_t i = next; i < batch_end; ++i) results[i] = futures[i].get();
    next = batch_end;
  }
  int code = 0;
  for (const auto& [c, line] : results) {
    std::cout << line << "\n";
    code = std::max(code, c);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-stage feasibility restoration for AC optimal power flow"};
  app.require_subcommand(1);

  RunSpec spec;
  auto* run = app.add_subcommand("run", "run the three-stage pipeline on one case");
  run->add_option("--case", spec.case_path, "MATPOWER case file")->required();
  run->add_option("--perturb", spec.perturb,
                  "named perturbation (P70, P60, Q80, V40) or custom:K,shrink,grow");
  run->add_option("--norm", spec.norm, "slack norm: l1, l2, linf")
      ->check(CLI::IsMember({"l1", "l2", "linf"}));
  run->add_option("--backend", spec.backend, "stage 1/2 backend: nlp or sdp")
      ->check(CLI::IsMember({"nlp", "sdp"}));
  run->add_option("--stage3", spec.stage3, "projection mode")
      ->check(CLI::IsMember({"power_flow", "least_squares"}));
  run->add_option("--report", spec.report_path, "write the JSON report here");
  run->add_option("--points", spec.points_stem, "dump stage points to <stem>.sK.point.txt");
  run->add_option("--budget-slack", spec.budget_slack, "relative Stage-2 budget inflation");
  run->add_option("--feas-tol", spec.feas_tol, "feasibility tolerance");
  run->add_option("--max-outer", spec.max_outer, "NLP outer iteration cap");
  run->add_option("--max-inner", spec.max_inner, "NLP inner iteration cap");
  run->add_flag("--trace", spec.trace, "emit iteration traces");

  std::string manifest;
  unsigned jobs = 0;
  auto* batch = app.add_subcommand("batch", "run a manifest of cases, one JSON line each");
  batch->add_option("--manifest", manifest, "JSON array of run objects")->required();
  batch->add_option("--jobs", jobs, "parallel runs (default: hardware)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return do_run(spec);
  return do_batch(manifest, jobs);
}
