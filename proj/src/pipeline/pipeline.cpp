#include "aip/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "aip/binary_io.hpp"
#include "aip/pipeline/hash.hpp"
#include "aip/pipeline/manifest.hpp"
#include "aip/recommenders/checkpoint.hpp"

namespace aip {

namespace fs = std::filesystem;
using nlohmann::json;

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex guard;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(guard);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

struct Condition {
  std::string model;
  const AttackSpec* spec;
  int epsilon;

  std::string dir() const { return "attacks/" + model + "/" + to_string(spec->config.kind) + "-eps" + std::to_string(epsilon); }
};

struct Attacked {
  std::vector<Image> images;
  AttackSummary summary;
};

std::vector<Condition> conditions_of(const ExperimentConfig& c) {
  std::vector<Condition> out;
  for (const auto& m : ranker_models(c))
    for (const auto& a : *c.attacks) {
      if (!a.models.empty() && std::find(a.models.begin(), a.models.end(), m.name) == a.models.end()) continue;
      for (int eps : a.epsilons) out.push_back({m.name, &a, eps});
    }
  return out;
}

bool bounded(AttackKind kind) { return kind != AttackKind::CSema; }

class Run {
 public:
  Run(const ExperimentConfig& config, const PipelineOptions& options)
      : cfg_(config), opt_(options), out_(*config.out), seed_(*config.seed) {}

  PipelineResult execute() {
    fs::create_directories(out_);
    const json config_json = cfg_;
    write_file((fs::path(out_) / "config.json").string(), config_json.dump(2) + "\n");
    if (opt_.resume) {
      if (auto m = read_manifest(out_)) manifest_ = *m;
    }
    manifest_.config_sha256 = sha256_file(path("config.json"));

    std::string key = sha256_hex("aip-pipeline-1");
    const auto& names = stage_names();
    const auto last = std::find(names.begin(), names.end(), opt_.until);
    if (last == names.end()) fail(ErrorKind::Config, "unknown stage '" + opt_.until + "'");
    for (auto it = names.begin(); it <= last; ++it) {
      key = sha256_hex(key + "|" + *it + "|" + stage_inputs(*it).dump());
      run_stage(*it, key);
    }
    return std::move(result_);
  }

 private:
  json stage_inputs(const std::string& stage) const {
    if (stage == "data") return {{"dataset", json(cfg_)["dataset"]}, {"seed", seed_}, {"cold", cfg_.eval->cold_count}};
    if (stage == "train") return {{"models", json(cfg_)["models"]}, {"fixed_extractor", cfg_.fixed_extractor}};
    if (stage == "attack") return {{"attacks", json(cfg_)["attacks"]}, {"classifier", json(cfg_)["classifier"]}};
    if (stage == "defend") return {{"defenses", cfg_.defenses ? json(cfg_)["defenses"] : json(nullptr)}, {"eval", json(cfg_)["eval"]}};
    return {{"eval", json(cfg_)["eval"]}};
  }

  void log(const std::string& msg) const {
    if (opt_.log) opt_.log(msg);
  }

  void run_stage(const std::string& stage, const std::string& key) {
    const auto start = std::chrono::steady_clock::now();
    StageOutcome outcome{stage, false, 0.0};
    const StageRecord* previous = manifest_.find(stage);
    const bool reusable = opt_.resume && previous && previous->status == "done" && previous->key == key &&
                          artifacts_intact(out_, previous->artifacts);
    try {
      if (reusable) {
        log(stage + ": up to date, loading");
        load(stage);
        outcome.skipped = true;
      } else {
        log(stage + ": running");
        fs::remove_all(fs::path(out_) / stage_dir(stage));
        std::vector<std::string> written;
        compute(stage, written);
        manifest_.put({stage, key, "done", "", hash_artifacts(out_, written)});
      }
      manifest_.last_good_stage = stage;
      // Stages after this one no longer describe what is on disk.
      dirty_after(stage, reusable);
      write_manifest(manifest_, out_);
    } catch (const Error& e) {
      manifest_.put({stage, key, "failed", e.what(), {}});
      write_manifest(manifest_, out_);
      fail(ErrorKind::Stage, "stage '" + stage + "' failed: " + e.what());
    } catch (const std::exception& e) {
      manifest_.put({stage, key, "failed", e.what(), {}});
      write_manifest(manifest_, out_);
      fail(ErrorKind::Stage, "stage '" + stage + "' failed: " + e.what());
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result_.stages.push_back(outcome);
  }

  void dirty_after(const std::string& stage, bool reused) {
    if (reused) return;
    const auto& names = stage_names();
    auto it = std::find(names.begin(), names.end(), stage);
    for (++it; it != names.end(); ++it) {
      auto& stages = manifest_.stages;
      stages.erase(std::remove_if(stages.begin(), stages.end(), [&](const StageRecord& r) { return r.name == *it; }),
                   stages.end());
    }
  }

  static std::string stage_dir(const std::string& stage) {
    if (stage == "data") return "data";
    if (stage == "train") return "models";
    if (stage == "attack") return "attacks";
    if (stage == "defend") return "defenses";
    return "reports";
  }

  void compute(const std::string& stage, std::vector<std::string>& written) {
    if (stage == "data") return compute_data(written);
    if (stage == "train") return compute_train(written);
    if (stage == "attack") return compute_attack(written);
    if (stage == "defend") return compute_defend(written);
    return compute_eval(written);
  }

  void load(const std::string& stage) {
    if (stage == "data") {
      ds_ = load_dataset(path("data"));
    } else if (stage == "train") {
      bpr_ = std::make_unique<BprModel>(load_bpr(path("models/bpr.rec")));
      fixed_ = load_extractor(path("models/fixed.fex"));
      for (const auto& m : ranker_models(cfg_)) rankers_[m.name] = load_ranker(path("models/" + m.name + ".rec"), ds_);
    } else if (stage == "attack") {
      for (const auto& c : conditions_of(cfg_)) {
        Attacked a;
        for (int item : ds_.cold_items) a.images.push_back(load_image(path(c.dir() + "/" + std::to_string(item) + ".png")));
        const json summary = json::parse(read_file(path(c.dir() + "/summary.json")));
        a.summary = {summary.at("max_linf_levels").get<int>(), summary.at("budget_violations").get<int>(),
                     summary.at("objective_start").get<double>(), summary.at("objective_end").get<double>()};
        attacked_[c.dir()] = std::move(a);
      }
    } else if (stage == "defend") {
      sweeps_.clear();
      if (fs::exists(path("defenses/sweeps.json")))
        for (const auto& s : json::parse(read_file(path("defenses/sweeps.json")))) sweeps_.push_back(sweep_from_json(s));
    } else {
      result_.report = report_from_json(json::parse(read_file(path("reports/report.json"))));
    }
  }

  std::string path(const std::string& rel) const { return (fs::path(out_) / rel).string(); }

  void compute_data(std::vector<std::string>& written) {
    const auto& section = *cfg_.dataset;
    InteractionDataset ds;
    if (!section.path.empty()) {
      ds = load_dataset(section.path);
      if (!ds.is_split()) ds = leave_one_out_split(ds, derive_seed(seed_, "split"));
    } else {
      SynthConfig synth = section.synth;
      synth.seed = derive_seed(seed_, "data");
      ds = leave_one_out_split(generate_synthetic(synth), derive_seed(seed_, "split"));
    }
    const auto cold_seed = derive_seed(seed_, "cold");
    ds = with_cold_items(ds, select_cold_items(ds, cfg_.eval->cold_count, cold_seed), cold_seed);
    const auto problems = validate_dataset(ds);
    if (!problems.empty()) fail(ErrorKind::Validation, "dataset is inconsistent: " + problems.front());
    save_dataset(ds, path("data"));
    written.push_back("data/manifest.json");
    for (int i = 0; i < ds.num_items; ++i) written.push_back("data/images/" + std::to_string(i) + ".png");
    // Round-trip through disk so a fresh run and a resumed run see the same bytes.
    ds_ = load_dataset(path("data"));
  }

  void compute_train(std::vector<std::string>& written) {
    fs::create_directories(path("models"));
    TrainConfig bpr_cfg = candidate_model(cfg_).train;
    bpr_cfg.seed = derive_seed(seed_, "bpr");
    log("train: bpr");
    save_bpr(bpr_train(ds_, bpr_cfg), path("models/bpr.rec"));
    written.push_back("models/bpr.rec");
    fixed_ = fixed_extractor(ds_, cfg_.fixed_extractor, derive_seed(seed_, "fixed-extractor"));
    save_extractor(fixed_, path("models/fixed.fex"));
    written.push_back("models/fixed.fex");
    for (const auto& m : ranker_models(cfg_)) {
      log("train: " + m.name);
      TrainConfig tc = m.train;
      tc.seed = derive_seed(seed_, "train");
      const std::string file = "models/" + m.name + ".rec";
      if (m.kind == "simrank") save_ranker(SimRankModel(fixed_, ds_), path(file));
      else if (m.kind == "vbpr") save_ranker(vbpr_train(ds_, fixed_, tc), path(file));
      else if (m.kind == "amr") save_ranker(amr_train(ds_, fixed_, tc), path(file));
      else save_ranker(dvbpr_train(ds_, tc), path(file));
      written.push_back(file);
    }
    load("train");
  }

  AttackResult attack_one(const VisualRanker& ranker, const AttackSpec& spec, int epsilon, int item) const {
    AttackConfig ac = spec.config;
    ac.epsilon = epsilon;
    ac.seed = derive_seed(seed_, "attack/" + std::to_string(item));
    if (spec.popular_hook) ac.hook = ds_.most_popular_item();
    if (spec.popular_target) ac.target_class = most_popular_class(ds_);
    const Image& image = ds_.images[static_cast<std::size_t>(item)];
    switch (ac.kind) {
      case AttackKind::Insa: return insa(ranker, image, ac);
      case AttackKind::Expa: return expa(ranker.extractor(), image, ds_.images[static_cast<std::size_t>(ac.hook)], ac);
      case AttackKind::CSema: {
        AttackResult r;
        r.image = csema(image, ds_.images[static_cast<std::size_t>(ac.hook)], spec.layout);
        r.linf = linf(r.image, quantize(image));
        r.linf_levels = linf_levels(r.image, quantize(image));
        return r;
      }
      case AttackKind::Fgsm:
      case AttackKind::Pgd: return classifier_targeted(image, *classifier_, ac);
    }
    fail(ErrorKind::Attack, "unsupported attack");
  }

  void compute_attack(std::vector<std::string>& written) {
    const auto conditions = conditions_of(cfg_);
    const bool needs_classifier = std::any_of(conditions.begin(), conditions.end(), [](const Condition& c) {
      return c.spec->config.kind == AttackKind::Fgsm || c.spec->config.kind == AttackKind::Pgd;
    });
    if (needs_classifier) {
      log("attack: training the surrogate classifier");
      classifier_ = std::make_unique<Classifier>(train_classifier(fixed_, ds_, cfg_.classifier.epochs, cfg_.classifier.step_size,
                                                                  derive_seed(seed_, "classifier")));
    }
    for (const auto& c : conditions) {
      log("attack: " + c.dir());
      const VisualRanker& ranker = *rankers_.at(c.model);
      const int n = static_cast<int>(ds_.cold_items.size());
      std::vector<AttackResult> results(static_cast<std::size_t>(n));
      parallel_for(n, opt_.threads, [&](int k) {
        results[static_cast<std::size_t>(k)] = attack_one(ranker, *c.spec, c.epsilon, ds_.cold_items[static_cast<std::size_t>(k)]);
      });
      fs::create_directories(path(c.dir()));
      Attacked a;
      json traces = json::object();
      for (int k = 0; k < n; ++k) {
        const auto& r = results[static_cast<std::size_t>(k)];
        const int item = ds_.cold_items[static_cast<std::size_t>(k)];
        const std::string file = c.dir() + "/" + std::to_string(item) + ".png";
        save_image(r.image, path(file));
        written.push_back(file);
        a.images.push_back(load_image(path(file)));
        a.summary.max_linf_levels = std::max(a.summary.max_linf_levels, r.linf_levels);
        if (bounded(c.spec->config.kind) && r.linf_levels > c.epsilon) ++a.summary.budget_violations;
        if (!r.trace.empty()) {
          a.summary.objective_start += r.trace.front() / n;
          a.summary.objective_end += r.trace.back() / n;
        }
        traces[std::to_string(item)] = {{"trace", r.trace}, {"linf", r.linf}, {"linf_levels", r.linf_levels}, {"seconds", r.seconds}};
      }
      const json summary{{"model", c.model},
                         {"attack", to_string(c.spec->config.kind)},
                         {"epsilon", c.epsilon},
                         {"max_linf_levels", a.summary.max_linf_levels},
                         {"budget_violations", a.summary.budget_violations},
                         {"objective_start", a.summary.objective_start},
                         {"objective_end", a.summary.objective_end},
                         {"items", traces}};
      write_file(path(c.dir() + "/summary.json"), summary.dump(2) + "\n");
      written.push_back(c.dir() + "/summary.json");
      attacked_[c.dir()] = std::move(a);
    }
  }

  const InjectionContext& context(const std::string& model) {
    auto it = contexts_.find(model);
    if (it == contexts_.end())
      it = contexts_.emplace(model, std::make_unique<InjectionContext>(*rankers_.at(model), *bpr_, ds_, cfg_.eval->candidates)).first;
    return *it->second;
  }

  std::vector<Image> cooperative_images() const {
    std::vector<Image> out;
    for (int item : ds_.cold_items) out.push_back(ds_.images[static_cast<std::size_t>(item)]);
    return out;
  }

  void compute_defend(std::vector<std::string>& written) {
    sweeps_.clear();
    if (!cfg_.defenses || cfg_.defenses->kinds.empty()) return;
    const auto coop = cooperative_images();
    for (const auto& c : conditions_of(cfg_)) {
      const std::string attack = to_string(c.spec->config.kind);
      const auto& filter = cfg_.defenses->attacks;
      if (!filter.empty() && std::find(filter.begin(), filter.end(), attack) == filter.end()) continue;
      const auto& budgets = cfg_.defenses->epsilons;
      if (!budgets.empty() && std::find(budgets.begin(), budgets.end(), c.epsilon) == budgets.end()) continue;
      const auto& ctx = context(c.model);
      std::vector<double> baseline;
      for (std::size_t k = 0; k < coop.size(); ++k) {
        const int item = ds_.cold_items[k];
        baseline.push_back(hit_rate(ctx.inject_and_rank(item, coop[k]), item, cfg_.eval->top_n));
      }
      for (auto kind : cfg_.defenses->kinds) {
        log("defend: " + c.dir() + " " + to_string(kind));
        SweepRecord s{c.model, attack, c.epsilon,
                      defense_sweep(ctx, ds_.cold_items, coop, attacked_.at(c.dir()).images, mean(baseline), kind,
                                    cfg_.eval->top_n, cfg_.defenses->defend_all)};
        sweeps_.push_back(std::move(s));
      }
    }
    fs::create_directories(path("defenses"));
    json table = json::array();
    for (const auto& s : sweeps_) table.push_back(sweep_json(s));
    write_file(path("defenses/sweeps.json"), table.dump(2) + "\n");
    written.push_back("defenses/sweeps.json");
  }

  void compute_eval(std::vector<std::string>& written) {
    MetricsReport report;
    report.top_n = cfg_.eval->top_n;
    report.candidates = cfg_.eval->candidates;
    report.users = ds_.num_users;
    report.cold_items = ds_.cold_items;
    const auto coop = cooperative_images();
    const auto conditions = conditions_of(cfg_);
    if (conditions.empty()) {
      for (const auto& m : ranker_models(cfg_)) {
        ConditionEntry e;
        e.report = evaluate_condition(context(m.name), ds_.cold_items, coop, coop, cfg_.eval->top_n);
        e.report.ranker = m.name;
        e.report.attack = "none";
        report.conditions.push_back(std::move(e));
      }
    }
    for (const auto& c : conditions) {
      log("eval: " + c.dir());
      const auto& a = attacked_.at(c.dir());
      ConditionEntry e;
      e.report = evaluate_condition(context(c.model), ds_.cold_items, coop, a.images, cfg_.eval->top_n);
      e.report.ranker = c.model;
      e.report.attack = to_string(c.spec->config.kind);
      e.report.epsilon = c.epsilon;
      e.attack = a.summary;
      report.conditions.push_back(std::move(e));
    }
    report.sweeps = sweeps_;
    fs::create_directories(path("reports"));
    write_file(path("reports/report.json"), report_json(report).dump(2) + "\n");
    write_file(path("reports/metrics.csv"), metrics_csv(report));
    written.push_back("reports/report.json");
    written.push_back("reports/metrics.csv");
    std::vector<int> budgets;
    for (const auto& c : conditions) budgets.push_back(c.epsilon);
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
    if (budgets.size() > 1)
      for (int eps : budgets) {
        const auto slice = report_for_epsilon(report, eps);
        const std::string stem = "reports/eps" + std::to_string(eps);
        write_file(path(stem + ".json"), report_json(slice).dump(2) + "\n");
        write_file(path(stem + ".csv"), metrics_csv(slice));
        written.push_back(stem + ".json");
        written.push_back(stem + ".csv");
      }
    result_.report = std::move(report);
  }

  const ExperimentConfig& cfg_;
  const PipelineOptions& opt_;
  std::string out_;
  std::uint64_t seed_;
  Manifest manifest_;
  PipelineResult result_;

  InteractionDataset ds_;
  std::unique_ptr<BprModel> bpr_;
  FeatureExtractor fixed_;
  std::map<std::string, std::unique_ptr<VisualRanker>> rankers_;
  std::unique_ptr<Classifier> classifier_;
  std::map<std::string, Attacked> attacked_;
  std::map<std::string, std::unique_ptr<InjectionContext>> contexts_;
  std::vector<SweepRecord> sweeps_;
};

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config, const PipelineOptions& options) {
  validate(config);
  return Run(config, options).execute();
}

MetricsReport run_experiment(const ExperimentConfig& config) { return run_pipeline(config).report; }

}  // namespace aip
