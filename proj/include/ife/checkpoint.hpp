#pragma once

#include <string>

#include "ife/model.hpp"

namespace ife {

// Checkpoint layout: magic "IFE1", uint32 LE header length, JSON header
// (version, model config, free-form meta, parameter manifest with name,
// shape and byte offset), then little-endian IEEE-754 float32 blobs in
// manifest order. Parameters are stored at 32-bit precision.
void save_checkpoint(const std::string& path, const Model& model, const std::string& meta_json = "{}");

struct LoadedCheckpoint {
  Model model;
  std::string meta_json;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace ife
