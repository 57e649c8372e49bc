#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aip/data/image.hpp"

namespace aip {

enum class DefenseKind { Jpeg, BitDepth };

std::string to_string(DefenseKind kind);
DefenseKind defense_kind_from_string(const std::string& name);

/// Levels ordered mildest first: JPEG quality {90,70,50,30,10}, bits {7,...,2}.
const std::vector<int>& defense_menu(DefenseKind kind);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::Jpeg;
  int level = 90;
};

void validate_defense_config(const DefenseConfig& cfg);

/// round(p * (2^bits - 1)) / (2^bits - 1), then back onto the 8-bit grid.
Image bit_depth_reduce(const Image& image, int bits);

/// Baseline JPEG encode at `quality` and decode. Single-channel images are
/// replicated to RGB for the codec and averaged back afterwards.
Image jpeg_roundtrip(const Image& image, int quality);

Image apply_defense(const Image& image, const DefenseConfig& cfg);

}  // namespace aip
