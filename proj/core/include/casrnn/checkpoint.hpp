#pragma once

#include <string>
#include <utility>
#include <vector>

#include "casrnn/cascade.hpp"
#include "casrnn/spatial.hpp"
#include "casrnn/tensor.hpp"

namespace casrnn {

// Ordered so that identical models serialize to identical bytes.
using TensorManifest = std::vector<std::pair<std::string, Tensor>>;

// CRNW container: magic "CRNW", u16 version, u32 tensor count, then per
// tensor u32 name length + UTF-8 name, u32 rank, u32 dims, f64 data. All
// little-endian; round trips are bit-exact.
void save_checkpoint(const TensorManifest& tensors, const std::string& path);
TensorManifest load_checkpoint(const std::string& path);

// Model checkpoints: every parameter value plus the hyperparameters as named
// scalar tensors (hyper.*), so a model rebuilds from its file alone.
void save_model(CascadeModel& model, const std::string& path);
void save_model(SsCascadeModel& model, const std::string& path);

// Which model kind a checkpoint holds.
bool checkpoint_is_spatial(const std::string& path);

CascadeModel load_cascade_model(const std::string& path);
SsCascadeModel load_sscas_model(const std::string& path);

}  // namespace casrnn
