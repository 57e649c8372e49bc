// aip: command-line front end for data generation, training, attacks,
// defenses and evaluation.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "aip/binary_io.hpp"
#include "aip/pipeline/hash.hpp"
#include "aip/pipeline/manifest.hpp"
#include "aip/pipeline/pipeline.hpp"
#include "aip/recommenders/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aip;

namespace {

struct PipelineFlags {
  std::string config;
  std::string out;
  bool resume = false;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config,
                              config_required ? "Experiment config (JSON)"
                                              : "Experiment config (JSON); the desk defaults when omitted")
                  ->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--out", f.out, "Output directory (overrides the config)");
  cmd->add_flag("--resume", f.resume, "Skip stages whose inputs and artifacts are unchanged");
}

ExperimentConfig resolve_config(const PipelineFlags& f) {
  ExperimentConfig c = f.config.empty() ? desk_config() : load_config(f.config);
  if (!f.out.empty()) c.out = f.out;
  apply_seed_override(c);
  return c;
}

PipelineOptions options(const PipelineFlags& f, int threads, bool verbose, const std::string& until = "eval") {
  PipelineOptions o;
  o.resume = f.resume;
  o.threads = threads;
  o.until = until;
  if (verbose) o.log = [](const std::string& m) { std::cerr << "[aip] " << m << "\n"; };
  return o;
}

void print_stages(const PipelineResult& r) {
  for (const auto& s : r.stages)
    std::printf("%-7s %s (%.1f s)\n", s.name.c_str(), s.skipped ? "reused" : "done", s.seconds);
}

void print_report(const MetricsReport& r) {
  std::printf("%-10s %-6s %4s  %9s %9s %10s  %9s %9s  %s\n", "model", "attack", "eps", "HR coop", "HR adv", "p", "test coop",
              "test adv", "delta_set");
  for (const auto& e : r.conditions) {
    const auto& c = e.report;
    std::printf("%-10s %-6s %4d  %9.4f %9.4f %10.3g  %9.4f %9.4f  %.4g\n", c.ranker.c_str(), c.attack.c_str(), c.epsilon,
                c.hr_cooperative, c.hr_adversarial, c.p_integrity.value_or(1.0), c.test_hr_cooperative,
                c.test_hr_adversarial, c.delta_set);
  }
  for (const auto& s : r.sweeps) {
    const std::string verdict = s.result.level ? to_string(s.result.kind) + " " + std::to_string(*s.result.level) : "none";
    std::printf("sweep %-10s %-6s eps %-3d %-8s -> %s\n", s.model.c_str(), s.attack.c_str(), s.epsilon,
                to_string(s.result.kind).c_str(), verdict.c_str());
  }
}

std::vector<int> parse_values(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const std::string token = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!token.empty()) out.push_back(std::stoi(token));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (out.empty()) fail(ErrorKind::Argument, "no sweep values given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial item promotion: attacks, defenses and evaluation for visually-aware recommenders"};
  app.require_subcommand(1);
  int threads = 1;
  bool verbose = false;
  app.add_option("--threads", threads, "Worker threads inside a stage")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", verbose, "Log stage progress to stderr");

  PipelineFlags gen_flags, train_flags, eval_flags, run_flags, sweep_flags;
  auto* gen = app.add_subcommand("gen-data", "Generate, split and save the synthetic dataset");
  add_pipeline_flags(gen, gen_flags, false);
  auto* train = app.add_subcommand("train", "Train the candidate generator and every second-stage model");
  add_pipeline_flags(train, train_flags, false);
  auto* eval = app.add_subcommand("eval", "Evaluate integrity and availability; completed stages are reused");
  add_pipeline_flags(eval, eval_flags, true);
  auto* run = app.add_subcommand("run", "Full pipeline: data, train, attack, defend, eval");
  add_pipeline_flags(run, run_flags, false);

  auto* sweep = app.add_subcommand("sweep", "Repeat the pipeline over a parameter grid");
  add_pipeline_flags(sweep, sweep_flags, false);
  std::string sweep_param;
  std::string sweep_values;
  sweep->add_option("--param", sweep_param, "Parameter to vary")->required()->check(CLI::IsMember({"eps", "factors"}));
  sweep->add_option("--values", sweep_values, "Comma-separated grid (default eps 4,8,16,32; factors 8,16,32)");

  auto* attack = app.add_subcommand("attack", "Attack one image against a trained model");
  std::string kind = "insa", model_path, image_path, hook_text, out_png, dataset_dir, target_text;
  int eps = 32, iters = 10, user_batch = 0;
  double step = 0.01;
  std::uint64_t attack_seed = 0;
  attack->add_option("--kind", kind, "Attack kind")->check(CLI::IsMember({"insa", "expa", "csema", "fgsm", "pgd"}));
  attack->add_option("--model", model_path, "Model checkpoint (.rec)")->required()->check(CLI::ExistingFile);
  attack->add_option("--image", image_path, "Image to perturb (PNG)")->required()->check(CLI::ExistingFile);
  attack->add_option("--eps", eps, "L-inf budget in 8-bit levels")->check(CLI::Range(1, 255));
  attack->add_option("--iters", iters, "Iterations K")->check(CLI::PositiveNumber);
  attack->add_option("--hook", hook_text, "Hook item id, or 'popular' (expa, csema)");
  attack->add_option("--target-class", target_text, "Target class, or 'popular' (fgsm, pgd)");
  attack->add_option("--step", step, "Step size");
  attack->add_option("--user-batch", user_batch, "Users per INSA step; 0 uses every user");
  attack->add_option("--seed", attack_seed, "Seed for user batches");
  attack->add_option("--dataset", dataset_dir, "Dataset directory the model was trained on")->required()->check(CLI::ExistingDirectory);
  attack->add_option("--out", out_png, "Output PNG; a JSON sidecar is written to <out>.json")->required();

  auto* defend = app.add_subcommand("defend", "Apply an input-transformation defense to every PNG in a directory");
  std::string defense_kind = "jpeg", in_dir, out_dir;
  int level = 90;
  defend->add_option("--kind", defense_kind, "Defense kind")->check(CLI::IsMember({"jpeg", "bitdepth"}));
  defend->add_option("--level", level, "JPEG quality or bit depth")->required();
  defend->add_option("--in", in_dir, "Input directory")->required()->check(CLI::ExistingDirectory);
  defend->add_option("--out", out_dir, "Output directory")->required();

  auto* show = app.add_subcommand("config", "Print the desk configuration as JSON");

  app.footer([&app] {
    std::string text = "Subcommand flags:\n";
    for (const auto* sub : app.get_subcommands({})) {
      text += "  " + sub->get_name() + ":";
      for (const auto* opt : sub->get_options())
        if (opt->get_name() != "--help") text += " " + opt->get_name(false, true);
      text += "\n";
    }
    return text + "Environment:\n  AIP_SEED  overrides the config seed\n";
  });

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen || *train || *eval || *run) {
      const PipelineFlags& f = *gen ? gen_flags : *train ? train_flags : *eval ? eval_flags : run_flags;
      PipelineFlags flags = f;
      if (*eval) flags.resume = true;
      const std::string until = *gen ? "data" : *train ? "train" : "eval";
      const auto cfg = resolve_config(flags);
      const auto result = run_pipeline(cfg, options(flags, threads, verbose, until));
      print_stages(result);
      if (until == "eval") print_report(result.report);
      std::printf("outputs under %s\n", cfg.out->c_str());
    } else if (*sweep) {
      const auto base = resolve_config(sweep_flags);
      const auto values = parse_values(sweep_values.empty() ? (sweep_param == "eps" ? "4,8,16,32" : "8,16,32") : sweep_values);
      if (sweep_param == "eps") {
        ExperimentConfig cfg = base;
        for (auto& a : *cfg.attacks)
          if (a.config.kind != AttackKind::CSema) a.epsilons = values;
        const auto result = run_pipeline(cfg, options(sweep_flags, threads, verbose));
        print_stages(result);
        print_report(result.report);
        std::printf("one report per epsilon under %s/reports\n", cfg.out->c_str());
      } else {
        Manifest top;
        json summary = json::array();
        const std::string root = *base.out;
        for (int v : values) {
          ExperimentConfig cfg = base;
          for (auto& m : *cfg.models)
            if (m.kind != "bpr") m.train.factors = v;
          const std::string sub = "factors-" + std::to_string(v);
          cfg.out = (fs::path(root) / sub).string();
          std::printf("== factors %d\n", v);
          const auto result = run_pipeline(cfg, options(sweep_flags, threads, verbose));
          print_report(result.report);
          summary.push_back({{"factors", v}, {"report", sub + "/reports/report.json"}});
          StageRecord record{sub, sha256_file((fs::path(root) / sub / "manifest.json").string()), "done", "", {}};
          record.artifacts = hash_artifacts(root, {sub + "/manifest.json", sub + "/reports/report.json", sub + "/reports/metrics.csv"});
          top.put(record);
          top.last_good_stage = sub;
        }
        write_file((fs::path(root) / "sweep.json").string(), json{{"param", "factors"}, {"runs", summary}}.dump(2) + "\n");
        top.stages.push_back({"sweep", "", "done", "", hash_artifacts(root, {"sweep.json"})});
        write_file((fs::path(root) / "config.json").string(), json(base).dump(2) + "\n");
        top.config_sha256 = sha256_file((fs::path(root) / "config.json").string());
        write_manifest(top, root);
      }
    } else if (*attack) {
      const auto ds = load_dataset(dataset_dir);
      const auto ranker = load_ranker(model_path, ds);
      AttackConfig ac;
      ac.kind = attack_kind_from_string(kind);
      ac.epsilon = eps;
      ac.iterations = iters;
      ac.step_size = step;
      ac.user_batch = user_batch;
      ac.seed = attack_seed;
      if (!hook_text.empty()) ac.hook = hook_text == "popular" ? ds.most_popular_item() : std::stoi(hook_text);
      if (!target_text.empty()) ac.target_class = target_text == "popular" ? most_popular_class(ds) : std::stoi(target_text);
      validate_attack_config(ac);
      if (ac.hook >= ds.num_items) fail(ErrorKind::Argument, "hook " + std::to_string(ac.hook) + " is not an item id");
      const Image image = load_image(image_path);
      AttackResult r;
      switch (ac.kind) {
        case AttackKind::Insa: r = insa(*ranker, image, ac); break;
        case AttackKind::Expa: r = expa(ranker->extractor(), image, ds.images[static_cast<std::size_t>(ac.hook)], ac); break;
        case AttackKind::CSema:
          r.image = csema(image, ds.images[static_cast<std::size_t>(ac.hook)], CsemaLayout{});
          r.linf = linf(r.image, quantize(image));
          r.linf_levels = linf_levels(r.image, quantize(image));
          break;
        case AttackKind::Fgsm:
        case AttackKind::Pgd: {
          const auto clf = train_classifier(ranker->extractor(), ds, 30, 0.5, attack_seed);
          r = classifier_targeted(image, clf, ac);
          break;
        }
      }
      save_image(r.image, out_png);
      const json sidecar{{"kind", kind},   {"epsilon", eps},          {"iterations", iters},
                         {"trace", r.trace}, {"linf", r.linf},          {"linf_levels", r.linf_levels},
                         {"seconds", r.seconds}, {"model", model_path}, {"image", image_path}};
      write_file(out_png + ".json", sidecar.dump(2) + "\n");
      std::printf("L-inf %d/255, objective %s\n", r.linf_levels,
                  r.trace.empty() ? "n/a" : (std::to_string(r.trace.front()) + " -> " + std::to_string(r.trace.back())).c_str());
    } else if (*defend) {
      const DefenseConfig cfg{defense_kind_from_string(defense_kind), level};
      validate_defense_config(cfg);
      fs::create_directories(out_dir);
      std::vector<fs::path> inputs;
      for (const auto& entry : fs::directory_iterator(in_dir))
        if (entry.path().extension() == ".png") inputs.push_back(entry.path());
      std::sort(inputs.begin(), inputs.end());
      for (const auto& p : inputs) save_image(apply_defense(load_image(p.string()), cfg), (fs::path(out_dir) / p.filename()).string());
      std::printf("%zu images defended with %s %d\n", inputs.size(), defense_kind.c_str(), level);
    } else if (*show) {
      std::cout << json(desk_config()).dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "aip: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "aip: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
