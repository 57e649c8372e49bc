#include "aip/eval/report.hpp"

#include <cstdio>

namespace aip {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_empty(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

const ConditionEntry& MetricsReport::find(const std::string& model, const std::string& attack, int epsilon) const {
  for (const auto& c : conditions)
    if (c.report.ranker == model && c.report.attack == attack && c.report.epsilon == epsilon) return c;
  fail(ErrorKind::Evaluation, "no condition " + model + "/" + attack + "/eps" + std::to_string(epsilon) + " in the report");
}

json sweep_json(const SweepRecord& s) {
  json levels = json::array();
  for (const auto& l : s.result.levels)
    levels.push_back({{"level", l.level}, {"hr_adversarial", l.hr_adversarial}, {"hr_cooperative", l.hr_cooperative}});
  const std::string verdict = s.result.level ? to_string(s.result.kind) + "-" + std::to_string(*s.result.level) : "none";
  return {{"model", s.model},
          {"attack", s.attack},
          {"epsilon", s.epsilon},
          {"defense", to_string(s.result.kind)},
          {"baseline_hr", s.result.baseline_hr},
          {"level", s.result.level ? json(*s.result.level) : json(nullptr)},
          {"verdict", verdict},
          {"levels", levels}};
}

SweepRecord sweep_from_json(const json& j) {
  SweepRecord s;
  s.model = j.at("model").get<std::string>();
  s.attack = j.at("attack").get<std::string>();
  s.epsilon = j.at("epsilon").get<int>();
  s.result.kind = defense_kind_from_string(j.at("defense").get<std::string>());
  s.result.baseline_hr = j.at("baseline_hr").get<double>();
  if (!j.at("level").is_null()) s.result.level = j.at("level").get<int>();
  for (const auto& l : j.at("levels"))
    s.result.levels.push_back({l.at("level").get<int>(), l.at("hr_adversarial").get<double>(), l.at("hr_cooperative").get<double>()});
  return s;
}

json report_json(const MetricsReport& r) {
  json conditions = json::array();
  for (const auto& entry : r.conditions) {
    const auto& c = entry.report;
    json items = json::array();
    for (const auto& row : c.rows)
      items.push_back({{"item", row.item},
                       {"hr_cooperative", row.hr_cooperative},
                       {"hr_adversarial", row.hr_adversarial},
                       {"test_hr_cooperative", row.test_hr_cooperative},
                       {"test_hr_adversarial", row.test_hr_adversarial},
                       {"delta_p", row.delta_p}});
    conditions.push_back({{"model", c.ranker},
                          {"attack", c.attack},
                          {"epsilon", c.epsilon},
                          {"integrity",
                           {{"hr_cooperative", c.hr_cooperative},
                            {"hr_adversarial", c.hr_adversarial},
                            {"lift", c.lift()},
                            {"p_value", optional_number(c.p_integrity)}}},
                          {"availability",
                           {{"test_hr_cooperative", c.test_hr_cooperative},
                            {"test_hr_adversarial", c.test_hr_adversarial},
                            {"p_value", optional_number(c.p_availability)}}},
                          {"delta_set", c.delta_set},
                          {"slot_violations", c.slot_violations},
                          {"perturbation",
                           {{"max_linf_levels", entry.attack.max_linf_levels},
                            {"budget_violations", entry.attack.budget_violations},
                            {"objective_start", entry.attack.objective_start},
                            {"objective_end", entry.attack.objective_end}}},
                          {"items", items}});
  }
  json sweeps = json::array();
  for (const auto& s : r.sweeps) sweeps.push_back(sweep_json(s));
  return {{"top_n", r.top_n},          {"candidates", r.candidates}, {"users", r.users},
          {"excluded_users", r.excluded_users}, {"cold_items", r.cold_items}, {"conditions", conditions},
          {"sweeps", sweeps}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  r.top_n = j.at("top_n").get<int>();
  r.candidates = j.at("candidates").get<int>();
  r.users = j.at("users").get<int>();
  r.excluded_users = j.at("excluded_users").get<int>();
  r.cold_items = j.at("cold_items").get<std::vector<int>>();
  for (const auto& c : j.at("conditions")) {
    ConditionEntry e;
    e.report.ranker = c.at("model").get<std::string>();
    e.report.attack = c.at("attack").get<std::string>();
    e.report.epsilon = c.at("epsilon").get<int>();
    const auto& in = c.at("integrity");
    e.report.hr_cooperative = in.at("hr_cooperative").get<double>();
    e.report.hr_adversarial = in.at("hr_adversarial").get<double>();
    e.report.p_integrity = number_or_empty(in, "p_value");
    const auto& av = c.at("availability");
    e.report.test_hr_cooperative = av.at("test_hr_cooperative").get<double>();
    e.report.test_hr_adversarial = av.at("test_hr_adversarial").get<double>();
    e.report.p_availability = number_or_empty(av, "p_value");
    e.report.delta_set = c.at("delta_set").get<double>();
    e.report.slot_violations = c.at("slot_violations").get<int>();
    const auto& pt = c.at("perturbation");
    e.attack = {pt.at("max_linf_levels").get<int>(), pt.at("budget_violations").get<int>(),
                pt.at("objective_start").get<double>(), pt.at("objective_end").get<double>()};
    for (const auto& row : c.at("items"))
      e.report.rows.push_back({row.at("item").get<int>(), row.at("hr_cooperative").get<double>(),
                               row.at("hr_adversarial").get<double>(), row.at("test_hr_cooperative").get<double>(),
                               row.at("test_hr_adversarial").get<double>(), row.at("delta_p").get<double>()});
    r.conditions.push_back(std::move(e));
  }
  for (const auto& s : j.at("sweeps")) r.sweeps.push_back(sweep_from_json(s));
  return r;
}

std::string metrics_csv(const MetricsReport& r) {
  std::string out = "item_id,condition,HR@" + std::to_string(r.top_n) + ",delta_p,p_value\n";
  for (const auto& entry : r.conditions) {
    const auto& c = entry.report;
    const std::string label = c.label();
    const std::string p_int = c.p_integrity ? fmt(*c.p_integrity) : "";
    const std::string p_av = c.p_availability ? fmt(*c.p_availability) : "";
    for (const auto& row : c.rows) {
      const std::string id = std::to_string(row.item);
      out += id + "," + label + "/cold/cooperative," + fmt(row.hr_cooperative) + ",0,\n";
      out += id + "," + label + "/cold/adversarial," + fmt(row.hr_adversarial) + "," + fmt(row.delta_p) + "," + p_int + "\n";
      out += id + "," + label + "/test/cooperative," + fmt(row.test_hr_cooperative) + ",0,\n";
      out += id + "," + label + "/test/adversarial," + fmt(row.test_hr_adversarial) + "," + fmt(row.delta_p) + "," + p_av + "\n";
    }
  }
  return out;
}

MetricsReport report_for_epsilon(const MetricsReport& report, int epsilon) {
  MetricsReport out = report;
  out.conditions.clear();
  out.sweeps.clear();
  for (const auto& c : report.conditions)
    if (c.report.epsilon == epsilon) out.conditions.push_back(c);
  for (const auto& s : report.sweeps)
    if (s.epsilon == epsilon) out.sweeps.push_back(s);
  return out;
}

}  // namespace aip
