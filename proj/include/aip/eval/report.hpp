#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "aip/eval/eval.hpp"

namespace aip {

// Perturbation bookkeeping for one attacked condition.
struct AttackSummary {
  int max_linf_levels = 0;
  int budget_violations = 0;  // items whose final distance exceeds the budget
  double objective_start = 0.0;  // mean over items
  double objective_end = 0.0;
};

struct ConditionEntry {
  ConditionReport report;
  AttackSummary attack;
};

struct SweepRecord {
  std::string model;
  std::string attack;
  int epsilon = 0;
  SweepResult result;
};

struct MetricsReport {
  int top_n = 5;
  int candidates = 100;
  int users = 0;
  int excluded_users = 0;
  std::vector<int> cold_items;
  std::vector<ConditionEntry> conditions;
  std::vector<SweepRecord> sweeps;

  /// The condition for (model, attack, epsilon); throws when absent.
  const ConditionEntry& find(const std::string& model, const std::string& attack, int epsilon) const;
};

nlohmann::json report_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
nlohmann::json sweep_json(const SweepRecord& sweep);
SweepRecord sweep_from_json(const nlohmann::json& j);

/// Flat table with header `item_id,condition,HR@N,delta_p,p_value`; four rows
/// per item and condition (cold and test item, cooperative and adversarial).
std::string metrics_csv(const MetricsReport& report);

/// Restriction of `report` to the conditions run at `epsilon`.
MetricsReport report_for_epsilon(const MetricsReport& report, int epsilon);

}  // namespace aip
