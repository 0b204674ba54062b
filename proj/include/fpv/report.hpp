#pragma once

#include <charconv>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpv/bench.hpp"
#include "fpv/recognition.hpp"

// JSON / CSV encodings of recognition traces and benchmark reports.

namespace fpv {

inline nlohmann::json to_json(const RecognitionStep &step) {
  return {{"t", step.result.t},
          {"h", step.result.heuristic},
          {"recognized", step.result.recognized},
          {"elapsed_ns", step.elapsed_ns}};
}

inline nlohmann::json to_json(const RecognitionTrace &trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto &s : trace.steps)
    steps.push_back(to_json(s));
  return {{"steps", steps}};
}

inline RecognitionTrace trace_from_json(const nlohmann::json &j) {
  RecognitionTrace trace;
  for (const auto &s : j.at("steps")) {
    RecognitionStep step;
    step.result.t = s.at("t").get<std::size_t>();
    step.result.heuristic = s.at("h").get<std::vector<double>>();
    step.result.recognized = s.at("recognized").get<std::vector<std::size_t>>();
    step.elapsed_ns = s.at("elapsed_ns").get<std::int64_t>();
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

namespace bench {

inline nlohmann::json to_json(const EvaluationReport &report) {
  using nlohmann::json;
  json lambdas = json::array();
  for (const auto &s : report.per_lambda)
    lambdas.push_back({{"lambda", s.lambda},
                       {"precision_mean", s.precision_mean},
                       {"precision_std", s.precision_std},
                       {"spread_mean", s.spread_mean},
                       {"spread_std", s.spread_std},
                       {"baseline_precision", s.baseline_precision},
                       {"baseline_spread", s.baseline_spread}});
  json instances = json::array();
  for (const auto &inst : report.instances)
    instances.push_back({{"name", inst.name},
                         {"goals", inst.goal_count},
                         {"true_goal", inst.true_goal_index},
                         {"observations", inst.observation_count},
                         {"recognized", inst.recognized},
                         {"trace", fpv::to_json(inst.trace)}});
  json failures = json::array();
  for (const auto &f : report.failures)
    failures.push_back({{"name", f.name}, {"error", f.error}});
  return {
      {"options",
       {{"lambdas", report.options.lambdas},
        {"n_samples", report.options.n_samples},
        {"seed", report.options.seed},
        {"repeats", report.options.repeats},
        {"aggregation", std::string(to_string(report.options.aggregation))}}},
      {"per_lambda", lambdas},
      {"instances", instances},
      {"failures", failures},
      {"counts",
       {{"succeeded", report.instances.size()},
        {"failed", report.failures.size()}}},
      {"timing",
       {{"estimation_ns_per_goal", report.timing.estimation_ns_per_goal},
        {"recognition_ns_per_step", report.timing.recognition_ns_per_step},
        {"goals_estimated", report.timing.goals_estimated},
        {"steps_recognized", report.timing.steps_recognized}}}};
}

namespace detail {

inline std::string csv_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

} // namespace detail

/// Precision per λ laid out one method per row, with the mean spread over
/// all λ values in the last column.
inline void write_precision_csv(std::ostream &out,
                                const EvaluationReport &report) {
  out << "method";
  for (const auto &s : report.per_lambda)
    out << ',' << detail::csv_number(s.lambda);
  out << ",spread\n";
  auto row = [&](const char *name, auto field, double spread) {
    out << name;
    for (const auto &s : report.per_lambda)
      out << ',' << detail::csv_number(s.*field);
    out << ',' << detail::csv_number(spread) << '\n';
  };
  double fpv_spread = 0.0, base_spread = 0.0, fpv_spread_std = 0.0;
  for (const auto &s : report.per_lambda) {
    fpv_spread += s.spread_mean;
    fpv_spread_std += s.spread_std;
    base_spread += s.baseline_spread;
  }
  const double k = report.per_lambda.empty()
                       ? 1.0
                       : static_cast<double>(report.per_lambda.size());
  row("fpv", &LambdaStats::precision_mean, fpv_spread / k);
  row("fpv_std", &LambdaStats::precision_std, fpv_spread_std / k);
  row("uniform", &LambdaStats::baseline_precision, base_spread / k);
}

inline void write_timing_csv(std::ostream &out,
                             const std::vector<TimingRow> &rows) {
  out << "goals,observations,estimation_ns_total,estimation_ns_per_goal,"
         "recognition_ns_per_step\n";
  for (const auto &r : rows)
    out << r.goals << ',' << r.observations << ','
        << detail::csv_number(r.estimation_ns_total) << ','
        << detail::csv_number(r.estimation_ns_per_goal) << ','
        << detail::csv_number(r.recognition_ns_per_step) << '\n';
}

} // namespace bench
} // namespace fpv
