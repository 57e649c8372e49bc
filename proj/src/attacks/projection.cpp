#include "aip/attacks/attacks.hpp"

namespace aip {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::Insa: return "insa";
    case AttackKind::Expa: return "expa";
    case AttackKind::CSema: return "csema";
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Pgd: return "pgd";
  }
  return "unknown";
}

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "insa") return AttackKind::Insa;
  if (name == "expa") return AttackKind::Expa;
  if (name == "csema") return AttackKind::CSema;
  if (name == "fgsm") return AttackKind::Fgsm;
  if (name == "pgd") return AttackKind::Pgd;
  fail(ErrorKind::Config, "unknown attack kind '" + name + "'");
}

std::vector<std::string> attack_config_errors(const AttackConfig& cfg) {
  std::vector<std::string> errors;
  const std::string name = to_string(cfg.kind);
  if (cfg.epsilon < 1 || cfg.epsilon > 255) errors.push_back(name + ": epsilon must be in [1,255]");
  if (cfg.iterations < 1) errors.push_back(name + ": iterations must be at least 1");
  if (!(cfg.step_size >= 0.0)) errors.push_back(name + ": step size must be non-negative");
  if (cfg.user_batch < 0) errors.push_back(name + ": user batch must be non-negative");
  const bool needs_hook = cfg.kind == AttackKind::Expa || cfg.kind == AttackKind::CSema;
  const bool needs_target = cfg.kind == AttackKind::Fgsm || cfg.kind == AttackKind::Pgd;
  if (needs_hook && cfg.hook < 0) errors.push_back(name + ": hook item id is required");
  if (!needs_hook && cfg.hook >= 0) errors.push_back(name + ": hook item id only applies to expa and csema");
  if (needs_target && cfg.target_class < 0) errors.push_back(name + ": target class is required");
  if (!needs_target && cfg.target_class >= 0) errors.push_back(name + ": target class only applies to fgsm and pgd");
  return errors;
}

void validate_attack_config(const AttackConfig& cfg) {
  const auto errors = attack_config_errors(cfg);
  if (!errors.empty()) fail(ErrorKind::Config, errors.front());
}

}  // namespace aip
