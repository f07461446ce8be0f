#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lifecast/linalg.hpp"
#include "lifecast/nn.hpp"
#include "lifecast/scorenet.hpp"

namespace lifecast {

// How a reference embedding is combined with its similarity weight before
// aggregation: scaled multiplies the embedding by the weight; learned appends
// the weight and applies an affine + ReLU map.
enum class Fusion { Scaled, Learned };

Fusion fusion_from_string(const std::string& s);
std::string to_string(Fusion f);

struct ModelShape {
  std::size_t value_dim = 1;
  std::size_t desc_dim = 1;
  std::size_t ref_dim = 8;     // reference embedding width
  std::size_t static_dim = 8;  // descriptor embedding width
  std::size_t hidden_dim = 16; // recurrent state width
  std::size_t channels = 16;
  std::size_t blocks = 3;
  std::size_t window = 8;
  std::size_t embed_width = 32;
  std::size_t static_depth = 2;
  Fusion fusion = Fusion::Learned;

  std::size_t context_dim() const { return ref_dim + static_dim; }
  std::size_t cond_dim() const { return hidden_dim + embed_width; }
  std::size_t trans_input_dim() const { return value_dim + context_dim(); }

  bool operator==(const ModelShape&) const = default;
};

struct ModelParameters {
  ModelShape shape;
  GruParams ref_enc;  // over reference trajectories
  Matrix fuse_w;      // ref_dim x (ref_dim + 1), learned fusion only
  Vec fuse_b;
  GruParams agg;  // over fused reference embeddings
  std::vector<Matrix> static_w;
  std::vector<Vec> static_b;
  Matrix init_w;  // hidden_dim x context_dim
  Vec init_b;
  GruParams trans;  // transition over [value; context]
  ScoreNetParams score;
};

// Each parameter group is drawn from its own named RNG substream, so two
// models built from the same seed share every group they have in common
// regardless of which fusion variant is active.
ModelParameters model_init(const ModelShape& shape, double scale, std::uint64_t seed);
ModelParameters model_zeros_like(const ModelParameters& p);

// Visits every parameter group as a named flat array (matrices row-major).
using ParamVisitor = std::function<void(const std::string&, Vec&)>;
using ConstParamVisitor = std::function<void(const std::string&, const Vec&)>;
void for_each_param(ModelParameters& p, const ParamVisitor& fn);
void for_each_param(const ModelParameters& p, const ConstParamVisitor& fn);

std::size_t param_count(const ModelParameters& p);

// FNV-1a over group names and raw double bytes. `skip_fusion` drops the
// fusion-specific groups so the two ablation variants can be compared.
std::uint64_t param_hash(const ModelParameters& p, bool skip_fusion = false);

std::string params_to_json(const ModelParameters& p);
ModelParameters params_from_json(const std::string& text);

}  // namespace lifecast
