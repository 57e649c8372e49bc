#include <filesystem>

#include "aip/binary_io.hpp"
#include "aip/data/json.hpp"

namespace aip {

using nlohmann::json;

void to_json(json& j, const ImageShape& s) { j = json::array({s.height, s.width, s.channels}); }

void from_json(const json& j, ImageShape& s) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::Config, "image shape must be [height, width, channels]");
  s = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

void to_json(json& j, const SynthConfig& c) {
  j = json{{"users", c.users},
           {"items", c.items},
           {"reserved_cold", c.reserved_cold},
           {"latent_dim", c.latent_dim},
           {"clusters", c.clusters},
           {"interactions_per_user", c.interactions_per_user},
           {"image", c.image},
           {"popularity_skew", c.popularity_skew},
           {"affinity", c.affinity},
           {"cluster_spread", c.cluster_spread},
           {"item_spread", c.item_spread},
           {"user_spread", c.user_spread},
           {"contrast", c.contrast},
           {"max_frequency", c.max_frequency},
           {"pixel_noise", c.pixel_noise},
           {"seed", c.seed}};
}

// Missing keys keep their defaults so hand-written configs can stay short.
void from_json(const json& j, SynthConfig& c) {
  SynthConfig d;
  c.users = j.value("users", d.users);
  c.items = j.value("items", d.items);
  c.reserved_cold = j.value("reserved_cold", d.reserved_cold);
  c.latent_dim = j.value("latent_dim", d.latent_dim);
  c.clusters = j.value("clusters", d.clusters);
  c.interactions_per_user = j.value("interactions_per_user", d.interactions_per_user);
  c.image = j.contains("image") ? j.at("image").get<ImageShape>() : d.image;
  c.popularity_skew = j.value("popularity_skew", d.popularity_skew);
  c.affinity = j.value("affinity", d.affinity);
  c.cluster_spread = j.value("cluster_spread", d.cluster_spread);
  c.item_spread = j.value("item_spread", d.item_spread);
  c.user_spread = j.value("user_spread", d.user_spread);
  c.contrast = j.value("contrast", d.contrast);
  c.max_frequency = j.value("max_frequency", d.max_frequency);
  c.pixel_noise = j.value("pixel_noise", d.pixel_noise);
  c.seed = j.value("seed", d.seed);
}

void save_dataset(const InteractionDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  json manifest{{"num_users", ds.num_users},
                {"num_items", ds.num_items},
                {"positives", ds.positives},
                {"test_item", ds.test_item},
                {"cold_items", ds.cold_items},
                {"item_cluster", ds.item_cluster},
                {"user_cluster", ds.user_cluster},
                {"config", ds.config},
                {"split_seed", ds.split_seed},
                {"cold_seed", ds.cold_seed},
                {"image_shape", ds.image_shape()}};
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(1) + "\n");
  for (int i = 0; i < ds.num_items; ++i)
    save_image(ds.images[static_cast<std::size_t>(i)], (fs::path(dir) / "images" / (std::to_string(i) + ".png")).string());
}

InteractionDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  json manifest;
  try {
    manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, "bad dataset manifest in '" + dir + "': " + e.what());
  }
  InteractionDataset ds;
  ds.num_users = manifest.at("num_users").get<int>();
  ds.num_items = manifest.at("num_items").get<int>();
  ds.positives = manifest.at("positives").get<std::vector<std::vector<int>>>();
  ds.test_item = manifest.at("test_item").get<std::vector<int>>();
  ds.cold_items = manifest.at("cold_items").get<std::vector<int>>();
  ds.item_cluster = manifest.at("item_cluster").get<std::vector<int>>();
  ds.user_cluster = manifest.at("user_cluster").get<std::vector<int>>();
  ds.config = manifest.at("config").get<SynthConfig>();
  ds.split_seed = manifest.at("split_seed").get<std::uint64_t>();
  ds.cold_seed = manifest.at("cold_seed").get<std::uint64_t>();
  for (int i = 0; i < ds.num_items; ++i)
    ds.images.push_back(load_image((fs::path(dir) / "images" / (std::to_string(i) + ".png")).string()));
  const auto problems = validate_dataset(ds);
  if (!problems.empty()) fail(ErrorKind::Io, "dataset in '" + dir + "' is inconsistent: " + problems.front());
  return ds;
}

}  // namespace aip
