#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "aip/data/dataset.hpp"

namespace aip {

bool InteractionDataset::is_cold(int item) const {
  return std::binary_search(cold_items.begin(), cold_items.end(), item);
}

bool InteractionDataset::is_positive(int user, int item) const {
  const auto& pos = positives[static_cast<std::size_t>(user)];
  return std::binary_search(pos.begin(), pos.end(), item);
}

std::size_t InteractionDataset::training_interactions() const {
  std::size_t n = 0;
  for (const auto& pos : positives) n += pos.size();
  return n;
}

std::vector<int> InteractionDataset::item_popularity() const {
  std::vector<int> counts(static_cast<std::size_t>(num_items), 0);
  for (const auto& pos : positives)
    for (int i : pos) ++counts[static_cast<std::size_t>(i)];
  for (int i : test_item)
    if (i >= 0) ++counts[static_cast<std::size_t>(i)];
  return counts;
}

int InteractionDataset::most_popular_item() const {
  std::vector<int> counts(static_cast<std::size_t>(num_items), 0);
  for (const auto& pos : positives)
    for (int i : pos) ++counts[static_cast<std::size_t>(i)];
  const auto best = std::max_element(counts.begin(), counts.end());
  return static_cast<int>(best - counts.begin());
}

InteractionDataset leave_one_out_split(const InteractionDataset& ds, std::uint64_t seed) {
  if (ds.is_split()) fail(ErrorKind::Split, "dataset is already split");
  InteractionDataset out = ds;
  out.test_item.assign(static_cast<std::size_t>(ds.num_users), -1);
  out.split_seed = seed;
  std::mt19937_64 rng(seed);
  for (int u = 0; u < ds.num_users; ++u) {
    auto& pos = out.positives[static_cast<std::size_t>(u)];
    if (pos.size() < 2)
      fail(ErrorKind::Split, "user " + std::to_string(u) + " has " + std::to_string(pos.size()) +
                                 " interactions; leave-one-out needs at least 2");
    std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
    const std::size_t k = pick(rng);
    out.test_item[static_cast<std::size_t>(u)] = pos[k];
    pos.erase(pos.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

std::vector<int> select_cold_items(const InteractionDataset& ds, int n, std::uint64_t seed) {
  if (n < 0) fail(ErrorKind::Selection, "negative cold item count");
  if (n == 0) return {};
  const auto counts = ds.item_popularity();
  std::vector<int> free;
  for (int i = 0; i < ds.num_items; ++i)
    if (counts[static_cast<std::size_t>(i)] == 0) free.push_back(i);
  if (static_cast<int>(free.size()) < n)
    fail(ErrorKind::Selection, "requested " + std::to_string(n) + " cold items but only " +
                                   std::to_string(free.size()) + " items have no interactions");
  std::mt19937_64 rng(seed);
  std::shuffle(free.begin(), free.end(), rng);
  free.resize(static_cast<std::size_t>(n));
  std::sort(free.begin(), free.end());
  return free;
}

InteractionDataset with_cold_items(InteractionDataset ds, std::vector<int> cold, std::uint64_t seed) {
  std::sort(cold.begin(), cold.end());
  ds.cold_items = std::move(cold);
  ds.cold_seed = seed;
  const auto problems = validate_dataset(ds);
  if (!problems.empty()) fail(ErrorKind::Selection, problems.front());
  return ds;
}

std::vector<std::string> validate_dataset(const InteractionDataset& ds) {
  std::vector<std::string> problems;
  const auto U = static_cast<std::size_t>(ds.num_users);
  if (ds.positives.size() != U) problems.push_back("positives table does not cover every user");
  if (ds.images.size() != static_cast<std::size_t>(ds.num_items)) problems.push_back("image store does not cover every item");
  if (!ds.test_item.empty() && ds.test_item.size() != U) problems.push_back("test items do not cover every user");
  if (!problems.empty()) return problems;

  const std::set<int> cold(ds.cold_items.begin(), ds.cold_items.end());
  if (cold.size() != ds.cold_items.size()) problems.push_back("duplicate cold item ids");
  for (std::size_t u = 0; u < U; ++u) {
    const auto& pos = ds.positives[u];
    if (!std::is_sorted(pos.begin(), pos.end()) || std::adjacent_find(pos.begin(), pos.end()) != pos.end())
      problems.push_back("positives of user " + std::to_string(u) + " are not a sorted set");
    for (int i : pos) {
      if (i < 0 || i >= ds.num_items) problems.push_back("user " + std::to_string(u) + " has out-of-range item " + std::to_string(i));
      if (cold.count(i)) problems.push_back("cold item " + std::to_string(i) + " appears in positives of user " + std::to_string(u));
    }
    if (ds.is_split()) {
      const int t = ds.test_item[u];
      if (t < 0 || t >= ds.num_items) {
        problems.push_back("user " + std::to_string(u) + " has no valid test item");
        continue;
      }
      if (std::binary_search(pos.begin(), pos.end(), t))
        problems.push_back("test item of user " + std::to_string(u) + " is still a training positive");
      if (cold.count(t)) problems.push_back("cold item " + std::to_string(t) + " is the test item of user " + std::to_string(u));
    }
  }
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& img = ds.images[i];
    if (img.size() == 0 || img.shape() != ds.images.front().shape()) {
      problems.push_back("item " + std::to_string(i) + " has a missing or mis-shaped image");
      continue;
    }
    if (!on_grid(img)) problems.push_back("image of item " + std::to_string(i) + " is not on the 8-bit grid");
  }
  return problems;
}

}  // namespace aip
