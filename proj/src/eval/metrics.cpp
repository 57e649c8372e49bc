#include <algorithm>
#include <numeric>

#include "aip/eval/eval.hpp"

namespace aip {

RankedList make_ranked_list(int user, std::vector<int> items, std::vector<double> scores) {
  if (items.size() != scores.size()) fail(ErrorKind::Evaluation, "items and scores differ in length");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && items[a] < items[b]);
  });
  RankedList list;
  list.user = user;
  list.items.reserve(items.size());
  list.scores.reserve(items.size());
  for (auto k : order) {
    list.items.push_back(items[k]);
    list.scores.push_back(scores[k]);
  }
  return list;
}

InjectionContext::InjectionContext(const VisualRanker& ranker, const BprModel& bpr, const InteractionDataset& ds, int k)
    : ranker_(&ranker), ds_(&ds), k_(k) {
  if (!ds.is_split()) fail(ErrorKind::Evaluation, "evaluation needs a leave-one-out split");
  candidates_.resize(static_cast<std::size_t>(ds.num_users));
  scores_.resize(static_cast<std::size_t>(ds.num_users));
  for (int u = 0; u < ds.num_users; ++u) {
    auto cands = bpr_candidates(bpr, ds, u, k);
    const int test = ds.test_item[static_cast<std::size_t>(u)];
    if (std::find(cands.begin(), cands.end(), test) == cands.end()) cands.push_back(test);
    auto& scores = scores_[static_cast<std::size_t>(u)];
    for (int i : cands) scores.push_back(ranker.score_catalog(u, i));
    candidates_[static_cast<std::size_t>(u)] = std::move(cands);
  }
}

std::vector<RankedList> InjectionContext::inject_and_rank_embedding(int cold_item, const Eigen::VectorXd& embedding) const {
  if (cold_item < 0 || cold_item >= ds_->num_items) fail(ErrorKind::Evaluation, "cold item id out of range");
  std::vector<RankedList> lists;
  lists.reserve(candidates_.size());
  for (int u = 0; u < ds_->num_users; ++u) {
    auto items = candidates_[static_cast<std::size_t>(u)];
    auto scores = scores_[static_cast<std::size_t>(u)];
    if (std::find(items.begin(), items.end(), cold_item) != items.end())
      fail(ErrorKind::Evaluation, "cold item " + std::to_string(cold_item) + " is already a candidate of user " + std::to_string(u));
    items.push_back(cold_item);
    scores.push_back(ranker_->score_embedding(u, embedding));
    lists.push_back(make_ranked_list(u, std::move(items), std::move(scores)));
  }
  return lists;
}

std::vector<RankedList> InjectionContext::inject_and_rank(int cold_item, const Image& cold_image) const {
  if (cold_image.size() == 0) fail(ErrorKind::Evaluation, "missing image for cold item " + std::to_string(cold_item));
  return inject_and_rank_embedding(cold_item, ranker_->embed(cold_image));
}

std::vector<RankedList> inject_and_rank(const VisualRanker& ranker, const BprModel& bpr, const InteractionDataset& ds,
                                        int cold_item, const Image& cold_image, int k) {
  return InjectionContext(ranker, bpr, ds, k).inject_and_rank(cold_item, cold_image);
}

double hit_rate(const std::vector<RankedList>& lists, int item, int n) {
  if (lists.empty()) fail(ErrorKind::Evaluation, "no ranked lists");
  int hits = 0;
  for (const auto& list : lists) {
    const auto it = std::find(list.items.begin(), list.items.end(), item);
    if (it == list.items.end())
      fail(ErrorKind::Evaluation, "item " + std::to_string(item) + " missing from the list of user " + std::to_string(list.user));
    if (it - list.items.begin() < n) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(lists.size());
}

double test_item_hit_rate(const std::vector<RankedList>& lists, const InteractionDataset& ds, int n) {
  if (lists.empty()) fail(ErrorKind::Evaluation, "no ranked lists");
  int hits = 0;
  for (const auto& list : lists) {
    const int test = ds.test_item[static_cast<std::size_t>(list.user)];
    const auto it = std::find(list.items.begin(), list.items.end(), test);
    if (it == list.items.end())
      fail(ErrorKind::Evaluation, "test item missing from the list of user " + std::to_string(list.user));
    if (it - list.items.begin() < n) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(lists.size());
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<int> slot_conservation_violations(const std::vector<RankedList>& lists, int n) {
  std::vector<int> bad;
  for (const auto& list : lists) {
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(n), list.items.size());
    // Count memberships item by item; duplicates would inflate the sum.
    std::vector<int> seen(list.items.begin(), list.items.begin() + static_cast<std::ptrdiff_t>(top));
    std::sort(seen.begin(), seen.end());
    const auto distinct = static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
    if (distinct != top) bad.push_back(list.user);
  }
  return bad;
}

double prediction_shift(const VisualRanker& ranker, const Image& original, const Image& attacked) {
  const Eigen::VectorXd before = ranker.embed(original);
  const Eigen::VectorXd after = ranker.embed(attacked);
  double total = 0.0;
  for (int u = 0; u < ranker.num_users(); ++u) total += ranker.score_embedding(u, after) - ranker.score_embedding(u, before);
  return total / static_cast<double>(ranker.num_users());
}

std::string ConditionReport::label() const {
  std::string out = ranker + "/" + attack + "/eps" + std::to_string(epsilon);
  if (!defense.empty()) out += "/" + defense;
  return out;
}

ConditionReport evaluate_condition(const InjectionContext& ctx, const std::vector<int>& cold_items,
                                   const std::vector<Image>& cooperative, const std::vector<Image>& adversarial, int n) {
  if (cooperative.size() != cold_items.size() || adversarial.size() != cold_items.size())
    fail(ErrorKind::Evaluation, "one cooperative and one adversarial image are needed per cold item");
  ConditionReport report;
  report.ranker = to_string(ctx.ranker().kind());
  std::vector<double> hr_c, hr_a, t_c, t_a, shifts;
  for (std::size_t k = 0; k < cold_items.size(); ++k) {
    const int item = cold_items[k];
    const Eigen::VectorXd ec = ctx.ranker().embed(cooperative[k]);
    const Eigen::VectorXd ea = ctx.ranker().embed(adversarial[k]);
    const auto coop = ctx.inject_and_rank_embedding(item, ec);
    const auto adv = ctx.inject_and_rank_embedding(item, ea);
    report.slot_violations += static_cast<int>(slot_conservation_violations(coop, n).size() +
                                               slot_conservation_violations(adv, n).size());
    ItemRow row;
    row.item = item;
    row.hr_cooperative = hit_rate(coop, item, n);
    row.hr_adversarial = hit_rate(adv, item, n);
    row.test_hr_cooperative = test_item_hit_rate(coop, ctx.dataset(), n);
    row.test_hr_adversarial = test_item_hit_rate(adv, ctx.dataset(), n);
    double shift = 0.0;
    for (int u = 0; u < ctx.ranker().num_users(); ++u)
      shift += ctx.ranker().score_embedding(u, ea) - ctx.ranker().score_embedding(u, ec);
    row.delta_p = shift / static_cast<double>(ctx.ranker().num_users());
    hr_c.push_back(row.hr_cooperative);
    hr_a.push_back(row.hr_adversarial);
    t_c.push_back(row.test_hr_cooperative);
    t_a.push_back(row.test_hr_adversarial);
    shifts.push_back(row.delta_p);
    report.rows.push_back(row);
  }
  report.hr_cooperative = mean(hr_c);
  report.hr_adversarial = mean(hr_a);
  report.test_hr_cooperative = mean(t_c);
  report.test_hr_adversarial = mean(t_a);
  report.delta_set = mean(shifts);
  try {
    report.p_integrity = paired_t_test(hr_c, hr_a);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Statistics) throw;
  }
  try {
    report.p_availability = paired_t_test(t_c, t_a);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Statistics) throw;
  }
  return report;
}

SweepResult defense_sweep(const InjectionContext& ctx, const std::vector<int>& cold_items,
                          const std::vector<Image>& cooperative, const std::vector<Image>& adversarial,
                          double cooperative_baseline_hr, DefenseKind kind, int n, bool defend_all) {
  if (adversarial.size() != cold_items.size() || cooperative.size() != cold_items.size())
    fail(ErrorKind::Evaluation, "one cooperative and one adversarial image are needed per cold item");
  SweepResult result;
  result.kind = kind;
  result.baseline_hr = cooperative_baseline_hr;
  for (int level : defense_menu(kind)) {
    const DefenseConfig cfg{kind, level};
    std::vector<double> adv_hr, coop_hr;
    for (std::size_t k = 0; k < cold_items.size(); ++k) {
      const int item = cold_items[k];
      adv_hr.push_back(hit_rate(ctx.inject_and_rank(item, apply_defense(adversarial[k], cfg)), item, n));
      coop_hr.push_back(hit_rate(ctx.inject_and_rank(item, apply_defense(cooperative[k], cfg)), item, n));
    }
    SweepLevel row{level, mean(adv_hr), mean(coop_hr)};
    const double bar = defend_all ? row.hr_cooperative : cooperative_baseline_hr;
    if (!result.level && row.hr_adversarial <= bar) result.level = level;
    result.levels.push_back(row);
  }
  return result;
}

}  // namespace aip
