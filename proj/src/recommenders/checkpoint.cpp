#include "aip/recommenders/checkpoint.hpp"

#include <cstring>

#include "aip/binary_io.hpp"
#include "aip/pipeline/hash.hpp"

namespace aip {

using nlohmann::json;

void to_json(json& j, const TrainConfig& c) {
  j = json{{"factors", c.factors},       {"step_size", c.step_size},   {"l2", c.l2},
           {"epochs", c.epochs},         {"batch_size", c.batch_size}, {"seed", c.seed},
           {"adv_weight", c.adv_weight}, {"adv_epsilon", c.adv_epsilon}, {"extractor", c.extractor}};
}

void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  c.factors = j.value("factors", d.factors);
  c.step_size = j.value("step_size", d.step_size);
  c.l2 = j.value("l2", d.l2);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
  c.adv_weight = j.value("adv_weight", d.adv_weight);
  c.adv_epsilon = j.value("adv_epsilon", d.adv_epsilon);
  c.extractor = j.value("extractor", d.extractor);
}

namespace {

constexpr char kMagic[8] = {'A', 'I', 'P', 'R', 'E', 'C', '0', '1'};

std::string encode(const json& header, const Eigen::VectorXd& params, const FeatureExtractor* fx) {
  ByteWriter out;
  out.raw(kMagic, sizeof kMagic);
  const std::string text = header.dump();
  out.u64(text.size());
  out.raw(text.data(), text.size());
  out.f64_block(params);
  const std::string fex = fx ? encode_extractor(*fx) : std::string();
  out.u64(fex.size());
  out.raw(fex.data(), fex.size());
  return out.take();
}

struct Decoded {
  json header;
  Eigen::VectorXd params;
  std::string fex;
};

Decoded decode(const std::string& bytes, const std::string& path) {
  ByteReader in(bytes);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) fail(ErrorKind::Io, "'" + path + "' is not a .rec checkpoint");
  Decoded d;
  std::string text(in.u64(), '\0');
  in.raw(text.data(), text.size());
  try {
    d.header = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, "bad checkpoint header in '" + path + "': " + e.what());
  }
  d.params = in.f64_block();
  d.fex.resize(in.u64());
  in.raw(d.fex.data(), d.fex.size());
  return d;
}

}  // namespace

RecordHeader read_record_header(const std::string& path) {
  auto d = decode(read_file(path), path);
  return {d.header.at("kind").get<std::string>(), d.header};
}

void save_bpr(const BprModel& model, const std::string& path) {
  const auto U = model.user_factors.rows(), I = model.item_factors.rows(), K = model.user_factors.cols();
  Eigen::VectorXd flat(1 + I + U * K + I * K);
  flat << model.offset, model.item_bias, Eigen::Map<const Eigen::VectorXd>(model.user_factors.data(), U * K),
      Eigen::Map<const Eigen::VectorXd>(model.item_factors.data(), I * K);
  json header{{"kind", "bpr"}, {"users", U}, {"items", I}, {"factors", K}, {"config", model.config}, {"seed", model.config.seed}};
  write_file(path, encode(header, flat, nullptr));
}

BprModel load_bpr(const std::string& path) {
  const auto d = decode(read_file(path), path);
  if (d.header.at("kind") != "bpr") fail(ErrorKind::Io, "'" + path + "' does not hold a BPR model");
  const Eigen::Index U = d.header.at("users"), I = d.header.at("items"), K = d.header.at("factors");
  if (d.params.size() != 1 + I + U * K + I * K) fail(ErrorKind::Io, "BPR parameter block has the wrong length");
  BprModel m;
  m.config = d.header.at("config").get<TrainConfig>();
  m.offset = d.params[0];
  m.item_bias = d.params.segment(1, I);
  m.user_factors = Eigen::Map<const Eigen::MatrixXd>(d.params.data() + 1 + I, U, K);
  m.item_factors = Eigen::Map<const Eigen::MatrixXd>(d.params.data() + 1 + I + U * K, I, K);
  return m;
}

void save_ranker(const VisualRanker& model, const std::string& path) {
  json header{{"users", model.num_users()}, {"feature_dim", model.extractor().output_dim()}};
  Eigen::VectorXd params;
  switch (model.kind()) {
    case RankerKind::SimRank:
      header["kind"] = "simrank";
      break;
    case RankerKind::Vbpr: {
      const auto& m = static_cast<const VbprModel&>(model);
      header["kind"] = m.adversarially_trained ? "amr" : "vbpr";
      header["items"] = m.num_items();
      header["factors"] = m.factors();
      header["config"] = m.config;
      header["seed"] = m.config.seed;
      params = m.parameters();
      break;
    }
    case RankerKind::Dvbpr: {
      const auto& m = static_cast<const DvbprModel&>(model);
      header["kind"] = "dvbpr";
      header["factors"] = m.user_visual().cols();
      header["config"] = m.config;
      header["seed"] = m.config.seed;
      params = Eigen::Map<const Eigen::VectorXd>(m.user_visual().data(), m.user_visual().size());
      break;
    }
  }
  write_file(path, encode(header, params, &model.extractor()));
}

std::unique_ptr<VisualRanker> load_ranker(const std::string& path, const InteractionDataset& ds) {
  const auto d = decode(read_file(path), path);
  const std::string kind = d.header.at("kind");
  if (d.fex.empty()) fail(ErrorKind::Io, "'" + path + "' has no embedded extractor");
  auto fx = decode_extractor(d.fex);
  if (d.header.at("users").get<int>() != ds.num_users) fail(ErrorKind::Io, "checkpoint user count does not match the dataset");
  if (kind == "simrank") return std::make_unique<SimRankModel>(std::move(fx), ds);
  if (kind == "vbpr" || kind == "amr") {
    auto m = std::make_unique<VbprModel>(ds.num_users, d.header.at("items").get<int>(), d.header.at("factors").get<int>(), fx);
    if (m->parameters().size() != d.params.size()) fail(ErrorKind::Io, "VBPR parameter block has the wrong length");
    m->parameters() = d.params;
    m->config = d.header.at("config").get<TrainConfig>();
    m->adversarially_trained = kind == "amr";
    m->set_item_features(catalog_features(m->extractor(), ds));
    return m;
  }
  if (kind == "dvbpr") {
    const Eigen::Index K = d.header.at("factors");
    if (d.params.size() != Eigen::Index(ds.num_users) * K) fail(ErrorKind::Io, "DVBPR parameter block has the wrong length");
    auto m = std::make_unique<DvbprModel>(Eigen::Map<const Eigen::MatrixXd>(d.params.data(), ds.num_users, K), std::move(fx));
    m->config = d.header.at("config").get<TrainConfig>();
    m->refresh_item_embeddings(ds);
    return m;
  }
  fail(ErrorKind::Io, "unknown model kind '" + kind + "' in '" + path + "'");
}

std::string model_digest(const VisualRanker& model) {
  ByteWriter out;
  out.f64_block(model.extractor().parameters());
  switch (model.kind()) {
    case RankerKind::SimRank: {
      const auto& m = static_cast<const SimRankModel&>(model);
      out.f64_block(Eigen::Map<const Eigen::VectorXd>(m.item_features().data(), m.item_features().size()));
      break;
    }
    case RankerKind::Vbpr: {
      const auto& m = static_cast<const VbprModel&>(model);
      out.f64_block(m.parameters());
      out.f64_block(Eigen::Map<const Eigen::VectorXd>(m.item_features().data(), m.item_features().size()));
      break;
    }
    case RankerKind::Dvbpr: {
      const auto& m = static_cast<const DvbprModel&>(model);
      out.f64_block(Eigen::Map<const Eigen::VectorXd>(m.user_visual().data(), m.user_visual().size()));
      out.f64_block(Eigen::Map<const Eigen::VectorXd>(m.item_embeddings().data(), m.item_embeddings().size()));
      break;
    }
  }
  return sha256_hex(out.take());
}

}  // namespace aip
