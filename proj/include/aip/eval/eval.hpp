#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aip/data/dataset.hpp"
#include "aip/defenses/defenses.hpp"
#include "aip/recommenders/bpr.hpp"
#include "aip/recommenders/ranker.hpp"

namespace aip {

struct RankedList {
  int user = 0;
  std::vector<int> items;      // descending score, ascending id on ties
  std::vector<double> scores;  // aligned with items
};

/// Sorts (item, score) pairs into a RankedList under the (score desc, id asc) rule.
RankedList make_ranked_list(int user, std::vector<int> items, std::vector<double> scores);

// Per-user candidate sets from the first stage, with the ordinary test item
// injected (not duplicated when BPR already proposed it) and second-stage
// scores cached. Cold items are added per query.
class InjectionContext {
 public:
  InjectionContext(const VisualRanker& ranker, const BprModel& bpr, const InteractionDataset& ds, int k);

  const VisualRanker& ranker() const { return *ranker_; }
  const InteractionDataset& dataset() const { return *ds_; }
  int candidate_count() const { return k_; }
  const std::vector<int>& candidates(int user) const { return candidates_[static_cast<std::size_t>(user)]; }

  /// Ranks candidates + test item + the cold item (scored through `cold_image`) for every user.
  std::vector<RankedList> inject_and_rank(int cold_item, const Image& cold_image) const;
  std::vector<RankedList> inject_and_rank_embedding(int cold_item, const Eigen::VectorXd& embedding) const;

 private:
  const VisualRanker* ranker_;
  const InteractionDataset* ds_;
  int k_;
  std::vector<std::vector<int>> candidates_;
  std::vector<std::vector<double>> scores_;
};

std::vector<RankedList> inject_and_rank(const VisualRanker& ranker, const BprModel& bpr, const InteractionDataset& ds,
                                        int cold_item, const Image& cold_image, int k);

/// HR_i@N: fraction of lists with `item` among their first N entries.
double hit_rate(const std::vector<RankedList>& lists, int item, int n);
/// HR_{test}@N: fraction of users whose own test item is in their top N.
double test_item_hit_rate(const std::vector<RankedList>& lists, const InteractionDataset& ds, int n);
double mean(const std::vector<double>& values);

/// Checks that every list's top-N holds exactly min(N, length) items; returns offending users.
std::vector<int> slot_conservation_violations(const std::vector<RankedList>& lists, int n);

/// Delta_{p_i} = mean over users of p'(attacked) - p(original).
double prediction_shift(const VisualRanker& ranker, const Image& original, const Image& attacked);

/// Two-sided paired t-test p-value; throws a statistics error when the differences have zero variance.
double paired_t_test(const std::vector<double>& before, const std::vector<double>& after);

struct ItemRow {
  int item = 0;
  double hr_cooperative = 0.0;
  double hr_adversarial = 0.0;
  double test_hr_cooperative = 0.0;  // ordinary test items, cooperative co-injection
  double test_hr_adversarial = 0.0;  // ordinary test items, adversarial co-injection
  double delta_p = 0.0;
};

struct ConditionReport {
  std::string ranker;
  std::string attack;
  int epsilon = 0;
  std::string defense;  // empty when undefended
  std::vector<ItemRow> rows;
  double hr_cooperative = 0.0;
  double hr_adversarial = 0.0;
  double test_hr_cooperative = 0.0;
  double test_hr_adversarial = 0.0;
  double delta_set = 0.0;
  std::optional<double> p_integrity;     // empty when degenerate
  std::optional<double> p_availability;
  int slot_violations = 0;

  std::string label() const;
  double lift() const { return hr_adversarial - hr_cooperative; }
};

/// Integrity and availability rows for one (ranker, attack) condition.
ConditionReport evaluate_condition(const InjectionContext& ctx, const std::vector<int>& cold_items,
                                   const std::vector<Image>& cooperative, const std::vector<Image>& adversarial, int n);

struct SweepLevel {
  int level = 0;
  double hr_adversarial = 0.0;
  double hr_cooperative = 0.0;  // cooperative images under the same defense
};

struct SweepResult {
  DefenseKind kind = DefenseKind::Jpeg;
  double baseline_hr = 0.0;  // what the defended adversarial HR must not exceed
  std::optional<int> level;  // weakest neutralizing level, empty when none works
  std::vector<SweepLevel> levels;
};

/// Walks the defense menu from mildest to strongest, defending the
/// adversarial images (and the cooperative ones too when `defend_all`), and
/// returns the first level whose mean adversarial HR@N falls to the
/// cooperative baseline.
SweepResult defense_sweep(const InjectionContext& ctx, const std::vector<int>& cold_items,
                          const std::vector<Image>& cooperative, const std::vector<Image>& adversarial,
                          double cooperative_baseline_hr, DefenseKind kind, int n, bool defend_all = false);

}  // namespace aip
