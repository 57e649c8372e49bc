#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aip/attacks/attacks.hpp"
#include "aip/data/dataset.hpp"
#include "aip/defenses/defenses.hpp"
#include "aip/recommenders/training.hpp"

namespace aip {

struct DatasetSection {
  SynthConfig synth;
  std::string path;  // load a saved dataset directory instead of generating one

  bool operator==(const DatasetSection&) const = default;
};

// kind is bpr (exactly one, the candidate generator), simrank, vbpr, amr or dvbpr.
struct ModelSpec {
  std::string name;
  std::string kind;
  TrainConfig train;

  bool operator==(const ModelSpec&) const = default;
};

struct AttackSpec {
  AttackConfig config;
  std::vector<int> epsilons;        // one condition per budget; config.epsilon is ignored
  bool popular_hook = false;        // hook resolves to the most popular training item
  bool popular_target = false;      // target class resolves to the most popular class
  std::vector<std::string> models;  // empty: every second-stage model
  CsemaLayout layout;

  bool operator==(const AttackSpec& o) const {
    return config == o.config && epsilons == o.epsilons && popular_hook == o.popular_hook &&
           popular_target == o.popular_target && models == o.models && layout.scale == o.layout.scale &&
           layout.anchor == o.layout.anchor && layout.caption_height == o.layout.caption_height &&
           layout.caption_level == o.layout.caption_level;
  }
};

struct ClassifierSection {
  int epochs = 30;
  double step_size = 0.5;

  bool operator==(const ClassifierSection&) const = default;
};

struct DefenseSection {
  std::vector<DefenseKind> kinds;
  std::vector<std::string> attacks;  // attack kinds to sweep; empty: all
  bool defend_all = false;
  std::vector<int> epsilons;  // budgets to sweep; empty: all

  bool operator==(const DefenseSection&) const = default;
};

struct EvalSection {
  int candidates = 100;  // K
  int top_n = 5;         // N
  int cold_count = 50;

  bool operator==(const EvalSection&) const = default;
};

// Required sections are optional here so that a partial document can be
// represented and every missing piece reported at once.
struct ExperimentConfig {
  std::optional<DatasetSection> dataset;
  std::optional<std::vector<ModelSpec>> models;
  std::optional<std::vector<AttackSpec>> attacks;
  std::optional<EvalSection> eval;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string fixed_extractor = "conv-small";
  ClassifierSection classifier;
  std::optional<DefenseSection> defenses;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Structural parse; type errors raise a config error naming the key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& c, const std::string& path);

/// Every violated invariant, empty when the config is runnable.
std::vector<std::string> config_errors(const ExperimentConfig& c);
/// Throws a validation error listing every entry of config_errors().
void validate(const ExperimentConfig& c);

/// Replaces the seed with $AIP_SEED when that variable is set.
void apply_seed_override(ExperimentConfig& c);

/// Seed for one stochastic stage, mixed from the global seed and a stage tag.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag);

/// Ready-to-run desk configuration: BPR + SimRank + VBPR + AMR + DVBPR, INSA
/// and EXPA over eps 4..32, the classifier baselines, and both defense sweeps
/// at eps 32.
ExperimentConfig desk_config();

const ModelSpec& candidate_model(const ExperimentConfig& c);
std::vector<ModelSpec> ranker_models(const ExperimentConfig& c);

}  // namespace aip
