#include "aip/pipeline/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "aip/binary_io.hpp"
#include "aip/data/json.hpp"
#include "aip/pipeline/hash.hpp"
#include "aip/recommenders/checkpoint.hpp"

namespace aip {

using nlohmann::json;

namespace {

std::string corner_name(Corner c) {
  switch (c) {
    case Corner::TopLeft: return "top-left";
    case Corner::TopRight: return "top-right";
    case Corner::BottomLeft: return "bottom-left";
    case Corner::BottomRight: return "bottom-right";
  }
  return "bottom-right";
}

Corner corner_from(const std::string& s) {
  if (s == "top-left") return Corner::TopLeft;
  if (s == "top-right") return Corner::TopRight;
  if (s == "bottom-left") return Corner::BottomLeft;
  if (s == "bottom-right") return Corner::BottomRight;
  fail(ErrorKind::Config, "unknown corner '" + s + "'");
}

json attack_to_json(const AttackSpec& a) {
  json j{{"kind", to_string(a.config.kind)},
         {"eps", a.epsilons},
         {"iters", a.config.iterations},
         {"step_size", a.config.step_size},
         {"optimizer", a.config.optimizer == OptimizerKind::AdaptiveMoment ? "adam" : "sgd"},
         {"user_batch", a.config.user_batch}};
  if (a.popular_hook) j["hook"] = "popular";
  else if (a.config.hook >= 0) j["hook"] = a.config.hook;
  if (a.popular_target) j["target_class"] = "popular";
  else if (a.config.target_class >= 0) j["target_class"] = a.config.target_class;
  if (!a.models.empty()) j["models"] = a.models;
  if (a.config.kind == AttackKind::CSema)
    j["layout"] = {{"scale", a.layout.scale},
                   {"anchor", corner_name(a.layout.anchor)},
                   {"caption_height", a.layout.caption_height},
                   {"caption_level", a.layout.caption_level}};
  return j;
}

// An id field that may also name the popularity rule.
void read_id(const json& j, const char* key, int& id, bool& popular) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "popular") fail(ErrorKind::Config, std::string(key) + " must be an id or \"popular\"");
    popular = true;
  } else {
    id = v.get<int>();
  }
}

AttackSpec attack_from_json(const json& j) {
  AttackSpec a;
  AttackConfig d;
  a.config.kind = attack_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("eps")) {
    if (j.at("eps").is_array()) a.epsilons = j.at("eps").get<std::vector<int>>();
    else a.epsilons = {j.at("eps").get<int>()};
  } else {
    a.epsilons = {d.epsilon};
  }
  a.config.iterations = j.value("iters", d.iterations);
  a.config.step_size = j.value("step_size", d.step_size);
  const std::string opt = j.value("optimizer", std::string("adam"));
  if (opt != "adam" && opt != "sgd") fail(ErrorKind::Config, "optimizer must be adam or sgd");
  a.config.optimizer = opt == "adam" ? OptimizerKind::AdaptiveMoment : OptimizerKind::PlainGradient;
  a.config.user_batch = j.value("user_batch", d.user_batch);
  read_id(j, "hook", a.config.hook, a.popular_hook);
  read_id(j, "target_class", a.config.target_class, a.popular_target);
  if (j.contains("models")) a.models = j.at("models").get<std::vector<std::string>>();
  if (j.contains("layout")) {
    const auto& l = j.at("layout");
    a.layout.scale = l.value("scale", a.layout.scale);
    a.layout.anchor = corner_from(l.value("anchor", corner_name(a.layout.anchor)));
    a.layout.caption_height = l.value("caption_height", a.layout.caption_height);
    a.layout.caption_level = l.value("caption_level", a.layout.caption_level);
  }
  return a;
}

template <typename F>
void section(const json& j, const char* key, std::vector<std::string>& errors, F&& read) {
  if (!j.contains(key)) return;
  try {
    read(j.at(key));
  } catch (const json::exception& e) {
    errors.push_back(std::string(key) + ": " + e.what());
  } catch (const Error& e) {
    errors.push_back(std::string(key) + ": " + e.what());
  }
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = json::object();
  if (c.dataset) {
    if (c.dataset->path.empty()) j["dataset"] = {{"synth", c.dataset->synth}};
    else j["dataset"] = {{"path", c.dataset->path}};
  }
  if (c.models) {
    j["models"] = json::array();
    for (const auto& m : *c.models) j["models"].push_back({{"name", m.name}, {"kind", m.kind}, {"train", m.train}});
  }
  if (c.attacks) {
    j["attacks"] = json::array();
    for (const auto& a : *c.attacks) j["attacks"].push_back(attack_to_json(a));
  }
  if (c.defenses) {
    json kinds = json::array();
    for (auto k : c.defenses->kinds) kinds.push_back(to_string(k));
    j["defenses"] = {{"kinds", kinds}, {"attacks", c.defenses->attacks}, {"defend_all", c.defenses->defend_all}, {"epsilons", c.defenses->epsilons}};
  }
  if (c.eval) j["eval"] = {{"candidates", c.eval->candidates}, {"top_n", c.eval->top_n}, {"cold_count", c.eval->cold_count}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.out) j["out"] = *c.out;
  j["fixed_extractor"] = c.fixed_extractor;
  j["classifier"] = {{"epochs", c.classifier.epochs}, {"step_size", c.classifier.step_size}};
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  ExperimentConfig c;
  std::vector<std::string> errors;
  section(j, "dataset", errors, [&](const json& s) {
    DatasetSection d;
    if (s.contains("path")) d.path = s.at("path").get<std::string>();
    if (s.contains("synth")) d.synth = s.at("synth").get<SynthConfig>();
    c.dataset = d;
  });
  section(j, "models", errors, [&](const json& s) {
    std::vector<ModelSpec> models;
    for (const auto& m : s) {
      ModelSpec spec;
      spec.kind = m.at("kind").get<std::string>();
      spec.name = m.value("name", spec.kind);
      if (m.contains("train")) spec.train = m.at("train").get<TrainConfig>();
      models.push_back(spec);
    }
    c.models = models;
  });
  section(j, "attacks", errors, [&](const json& s) {
    std::vector<AttackSpec> attacks;
    for (const auto& a : s) attacks.push_back(attack_from_json(a));
    c.attacks = attacks;
  });
  section(j, "defenses", errors, [&](const json& s) {
    DefenseSection d;
    for (const auto& k : s.value("kinds", std::vector<std::string>{})) d.kinds.push_back(defense_kind_from_string(k));
    d.attacks = s.value("attacks", std::vector<std::string>{});
    d.defend_all = s.value("defend_all", false);
    d.epsilons = s.value("epsilons", std::vector<int>{});
    c.defenses = d;
  });
  section(j, "eval", errors, [&](const json& s) {
    EvalSection e;
    e.candidates = s.value("candidates", e.candidates);
    e.top_n = s.value("top_n", e.top_n);
    e.cold_count = s.value("cold_count", e.cold_count);
    c.eval = e;
  });
  section(j, "seed", errors, [&](const json& s) { c.seed = s.get<std::uint64_t>(); });
  section(j, "out", errors, [&](const json& s) { c.out = s.get<std::string>(); });
  section(j, "fixed_extractor", errors, [&](const json& s) { c.fixed_extractor = s.get<std::string>(); });
  section(j, "classifier", errors, [&](const json& s) {
    c.classifier.epochs = s.value("epochs", c.classifier.epochs);
    c.classifier.step_size = s.value("step_size", c.classifier.step_size);
  });
  if (!errors.empty()) {
    std::string msg = "config is malformed:";
    for (const auto& e : errors) msg += "\n  " + e;
    fail(ErrorKind::Config, msg);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, "'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void save_config(const ExperimentConfig& c, const std::string& path) { write_file(path, json(c).dump(2) + "\n"); }

std::vector<std::string> config_errors(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (!c.dataset) errors.push_back("dataset: section is required");
  if (!c.models) errors.push_back("models: section is required");
  if (!c.attacks) errors.push_back("attacks: section is required");
  if (!c.eval) errors.push_back("eval: section is required");
  if (!c.seed) errors.push_back("seed: a global seed is required");
  if (!c.out) errors.push_back("out: an output directory is required");

  int item_count = -1;
  if (c.dataset) {
    if (!c.dataset->path.empty()) {
      if (!std::filesystem::exists(std::filesystem::path(c.dataset->path) / "manifest.json"))
        errors.push_back("dataset: no dataset manifest under '" + c.dataset->path + "'");
    } else {
      const auto& s = c.dataset->synth;
      if (s.users <= 0 || s.items <= 0 || s.latent_dim <= 0 || s.clusters <= 0 || s.reserved_cold < 0)
        errors.push_back("dataset: synthetic sizes must be positive");
      if (s.interactions_per_user < 2) errors.push_back("dataset: each user needs at least two interactions");
      item_count = s.items + s.reserved_cold;
      if (c.eval && c.eval->cold_count > s.reserved_cold)
        errors.push_back("eval: cold_count " + std::to_string(c.eval->cold_count) + " exceeds the " +
                         std::to_string(s.reserved_cold) + " reserved cold items");
    }
  }
  try {
    parse_architecture(c.fixed_extractor);
  } catch (const Error& e) {
    errors.push_back(std::string("fixed_extractor: ") + e.what());
  }
  if (c.classifier.epochs < 1 || !(c.classifier.step_size > 0.0)) errors.push_back("classifier: epochs and step size must be positive");

  std::set<std::string> names;
  if (c.models) {
    int bpr = 0;
    for (const auto& m : *c.models) {
      const std::string where = "models[" + m.name + "]: ";
      if (!names.insert(m.name).second) errors.push_back(where + "duplicate model name");
      if (m.kind == "bpr") ++bpr;
      else if (m.kind != "simrank" && m.kind != "vbpr" && m.kind != "amr" && m.kind != "dvbpr")
        errors.push_back(where + "unknown kind '" + m.kind + "'");
      try {
        validate_train_config(m.train);
      } catch (const Error& e) {
        errors.push_back(where + e.what());
      }
      if (m.kind == "amr" && m.train.adv_weight < 0.0) errors.push_back(where + "adv_weight must be non-negative");
      if (m.kind == "dvbpr") {
        try {
          parse_architecture(m.train.extractor);
        } catch (const Error& e) {
          errors.push_back(where + e.what());
        }
      }
    }
    if (bpr != 1) errors.push_back("models: exactly one bpr candidate generator is required");
  }
  if (c.attacks) {
    for (std::size_t k = 0; k < c.attacks->size(); ++k) {
      const auto& a = (*c.attacks)[k];
      const std::string where = "attacks[" + std::to_string(k) + "]: ";
      AttackConfig probe = a.config;
      if (a.popular_hook) probe.hook = 0;
      if (a.popular_target) probe.target_class = 0;
      if (a.epsilons.empty()) errors.push_back(where + "at least one epsilon is required");
      for (int eps : a.epsilons)
        if (eps < 1 || eps > 255) errors.push_back(where + "epsilon " + std::to_string(eps) + " is outside [1,255]");
      probe.epsilon = 1;
      for (const auto& e : attack_config_errors(probe)) errors.push_back(where + e);
      if (item_count > 0 && !a.popular_hook && a.config.hook >= item_count)
        errors.push_back(where + "hook " + std::to_string(a.config.hook) + " is not an item id");
      for (const auto& m : a.models)
        if (!names.count(m) && c.models) errors.push_back(where + "unknown model '" + m + "'");
    }
  }
  if (c.defenses)
    for (const auto& a : c.defenses->attacks) {
      try {
        attack_kind_from_string(a);
      } catch (const Error& e) {
        errors.push_back(std::string("defenses: ") + e.what());
      }
    }
  if (c.eval) {
    if (c.eval->candidates < 0) errors.push_back("eval: candidates must be non-negative");
    if (c.eval->top_n < 1) errors.push_back("eval: top_n must be at least 1");
    if (c.eval->cold_count < 1) errors.push_back("eval: cold_count must be at least 1");
  }
  return errors;
}

void validate(const ExperimentConfig& c) {
  const auto errors = config_errors(c);
  if (errors.empty()) return;
  std::string msg = std::to_string(errors.size()) + " config error" + (errors.size() == 1 ? "" : "s") + ":";
  for (const auto& e : errors) msg += "\n  " + e;
  fail(ErrorKind::Validation, msg);
}

void apply_seed_override(ExperimentConfig& c) {
  const char* value = std::getenv("AIP_SEED");
  if (!value || !*value) return;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(value, &end, 10);
  if (*end != '\0') fail(ErrorKind::Config, std::string("AIP_SEED is not an unsigned integer: '") + value + "'");
  c.seed = seed;
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
  const std::string digest = sha256_hex(std::to_string(seed) + "/" + tag);
  return std::stoull(digest.substr(0, 15), nullptr, 16);
}

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.dataset = DatasetSection{};
  TrainConfig bpr;
  bpr.step_size = 0.05;
  TrainConfig vbpr;
  vbpr.step_size = 0.01;
  TrainConfig amr = vbpr;
  amr.adv_weight = 1.0;
  amr.adv_epsilon = 0.5;
  TrainConfig dvbpr;
  dvbpr.step_size = 0.01;
  dvbpr.epochs = 5;
  c.models = std::vector<ModelSpec>{{"bpr", "bpr", bpr},
                                    {"simrank", "simrank", TrainConfig{}},
                                    {"vbpr", "vbpr", vbpr},
                                    {"amr", "amr", amr},
                                    {"dvbpr", "dvbpr", dvbpr}};
  AttackSpec insa;
  insa.config.kind = AttackKind::Insa;
  insa.config.iterations = 30;
  insa.epsilons = {4, 8, 16, 32};
  AttackSpec expa;
  expa.config.kind = AttackKind::Expa;
  expa.config.iterations = 30;
  expa.epsilons = {4, 8, 16, 32};
  expa.popular_hook = true;
  AttackSpec fgsm;
  fgsm.config.kind = AttackKind::Fgsm;
  fgsm.config.iterations = 1;
  fgsm.epsilons = {32};
  fgsm.popular_target = true;
  AttackSpec pgd = fgsm;
  pgd.config.kind = AttackKind::Pgd;
  pgd.config.iterations = 20;
  pgd.config.step_size = 2.0 / 255.0;
  AttackSpec sema;
  sema.config.kind = AttackKind::CSema;
  sema.config.iterations = 1;
  sema.epsilons = {255};
  sema.popular_hook = true;
  c.attacks = std::vector<AttackSpec>{insa, expa, sema, fgsm, pgd};
  c.defenses = DefenseSection{{DefenseKind::Jpeg, DefenseKind::BitDepth}, {"insa", "expa"}, false, {32}};
  c.eval = EvalSection{};
  c.seed = 2024;
  c.out = "runs/desk";
  return c;
}

const ModelSpec& candidate_model(const ExperimentConfig& c) {
  if (c.models)
    for (const auto& m : *c.models)
      if (m.kind == "bpr") return m;
  fail(ErrorKind::Config, "no bpr candidate generator configured");
}

std::vector<ModelSpec> ranker_models(const ExperimentConfig& c) {
  std::vector<ModelSpec> out;
  if (c.models)
    for (const auto& m : *c.models)
      if (m.kind != "bpr") out.push_back(m);
  return out;
}

}  // namespace aip
