#pragma once

#include <cstddef>
#include <vector>

#include "lifecast/model.hpp"

namespace lifecast {

// Reference selection: the k library entries closest to `s` in squared
// Euclidean distance, ascending, ties broken by library index. k larger than
// the library returns everything.
struct ReferenceSelection {
  std::vector<std::size_t> indices;
  Vec distances2;
};

ReferenceSelection select_references(const std::vector<Vec>& library, const Vec& s, std::size_t k);

// Softmax of -gamma * d2 with max subtraction; gamma = 0 gives uniform
// weights. Weights sum to one and each lies in (0, 1].
Vec similarity_weights(const Vec& distances2, double gamma);

// Inputs the context encoder consumes for one focal product.
struct ContextInput {
  std::vector<Matrix> refs;  // each T_k x value_dim, oldest row first
  Vec weights;               // similarity weights, parallel to refs
  Vec descriptor;            // standardized descriptors
};

struct ContextCache {
  std::vector<std::vector<GruCache>> ref_caches;
  std::vector<Vec> ref_embed;      // final reference embeddings
  std::vector<Vec> fused;          // after fusion
  std::vector<Vec> fuse_pre;       // learned-fusion pre-activations
  std::vector<std::size_t> order;  // aggregation order (weight descending)
  std::vector<GruCache> agg_caches;
  std::vector<Vec> static_pre;  // pre-activations per layer
  std::vector<Vec> static_act;  // post-ReLU per layer (last = h_static)
  Vec h_refs, h_static, c;
  ContextInput input;
};

struct ContextState {
  Vec c;   // [h_refs; h_static]
  Vec h0;  // initial recurrent state
};

ContextState build_context(const ModelParameters& p, const ContextInput& in);
ContextState build_context(const ModelParameters& p, const ContextInput& in, ContextCache& cache);

// Accumulates into `grad` the gradients of the loss with respect to every
// context-encoder parameter, given upstream gradients for c and h0.
void context_backward(const ModelParameters& p, const ContextCache& cache, const Vec& dc,
                      const Vec& dh0, ModelParameters& grad);

}  // namespace lifecast
