#include "lifecast/context.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lifecast {

ReferenceSelection select_references(const std::vector<Vec>& library, const Vec& s,
                                     std::size_t k) {
  require_finite(s, "select_references: descriptor");
  std::vector<std::size_t> idx(library.size());
  std::iota(idx.begin(), idx.end(), 0);
  Vec d2(library.size());
  for (std::size_t i = 0; i < library.size(); ++i) {
    if (library[i].size() != s.size())
      throw std::invalid_argument("select_references: descriptor length mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      double d = library[i][j] - s[j];
      acc += d * d;
    }
    d2[i] = acc;
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
  if (idx.size() > k) idx.resize(k);
  ReferenceSelection sel;
  sel.indices = idx;
  sel.distances2.reserve(idx.size());
  for (std::size_t i : idx) sel.distances2.push_back(d2[i]);
  return sel;
}

Vec similarity_weights(const Vec& distances2, double gamma) {
  if (distances2.empty()) return {};
  if (gamma < 0) throw std::invalid_argument("similarity_weights: negative temperature");
  Vec a(distances2.size());
  double amax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = -gamma * distances2[i];
    amax = std::max(amax, a[i]);
  }
  double sum = 0.0;
  for (double& x : a) {
    x = std::exp(x - amax);
    sum += x;
  }
  for (double& x : a) x /= sum;
  return a;
}

namespace {

// Aggregation order: weight descending, ties keep selection order.
std::vector<std::size_t> agg_order(const Vec& weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return order;
}

}  // namespace

ContextState build_context(const ModelParameters& p, const ContextInput& in) {
  ContextCache cache;
  return build_context(p, in, cache);
}

ContextState build_context(const ModelParameters& p, const ContextInput& in,
                           ContextCache& cache) {
  const ModelShape& sh = p.shape;
  if (in.refs.size() != in.weights.size())
    throw std::invalid_argument("build_context: refs/weights mismatch");
  if (in.descriptor.size() != sh.desc_dim)
    throw std::invalid_argument("build_context: bad descriptor length");
  require_finite(in.descriptor, "build_context: descriptor");

  cache = ContextCache{};
  cache.input = in;

  for (const Matrix& traj : in.refs) {
    if (traj.cols() != sh.value_dim)
      throw std::invalid_argument("build_context: bad reference value dim");
    require_finite(traj, "build_context: reference trajectory");
    Vec h(sh.ref_dim, 0.0);
    std::vector<GruCache> caches;
    caches.reserve(traj.rows());
    for (std::size_t t = 0; t < traj.rows(); ++t) {
      Vec x(traj.cols());
      for (std::size_t d = 0; d < traj.cols(); ++d) x[d] = traj(t, d);
      GruStep st = gru_step(p.ref_enc, h, x);
      h = st.h;
      caches.push_back(std::move(st.cache));
    }
    cache.ref_embed.push_back(h);
    cache.ref_caches.push_back(std::move(caches));
  }

  for (std::size_t k = 0; k < cache.ref_embed.size(); ++k) {
    const Vec& hk = cache.ref_embed[k];
    double w = in.weights[k];
    if (sh.fusion == Fusion::Scaled) {
      Vec f(hk.size());
      for (std::size_t i = 0; i < hk.size(); ++i) f[i] = w * hk[i];
      cache.fused.push_back(std::move(f));
      cache.fuse_pre.emplace_back();
    } else {
      Vec hw = hk;
      hw.push_back(w);
      Vec pre = matvec(p.fuse_w, hw);
      axpy(1.0, p.fuse_b, pre);
      Vec f(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) f[i] = std::max(pre[i], 0.0);
      cache.fuse_pre.push_back(std::move(pre));
      cache.fused.push_back(std::move(f));
    }
  }

  cache.order = agg_order(in.weights);
  Vec ha(sh.ref_dim, 0.0);
  for (std::size_t i : cache.order) {
    GruStep st = gru_step(p.agg, ha, cache.fused[i]);
    ha = st.h;
    cache.agg_caches.push_back(std::move(st.cache));
  }
  cache.h_refs = ha;

  Vec act = in.descriptor;
  for (std::size_t l = 0; l < p.static_w.size(); ++l) {
    Vec pre = matvec(p.static_w[l], act);
    axpy(1.0, p.static_b[l], pre);
    Vec post(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) post[i] = std::max(pre[i], 0.0);
    cache.static_pre.push_back(std::move(pre));
    cache.static_act.push_back(post);
    act = std::move(post);
  }
  cache.h_static = act;

  ContextState out;
  out.c = concat(cache.h_refs, cache.h_static);
  cache.c = out.c;
  out.h0 = matvec(p.init_w, out.c);
  axpy(1.0, p.init_b, out.h0);
  return out;
}

void context_backward(const ModelParameters& p, const ContextCache& cache, const Vec& dc_in,
                      const Vec& dh0, ModelParameters& grad) {
  const ModelShape& sh = p.shape;
  if (dh0.size() != sh.hidden_dim) throw std::invalid_argument("context_backward: bad dh0");

  Vec dc = dc_in.empty() ? Vec(sh.context_dim(), 0.0) : dc_in;
  if (dc.size() != sh.context_dim()) throw std::invalid_argument("context_backward: bad dc");

  add_outer(grad.init_w, 1.0, dh0, cache.c);
  axpy(1.0, dh0, grad.init_b);
  axpy(1.0, tmatvec(p.init_w, dh0), dc);

  Vec dha(dc.begin(), dc.begin() + sh.ref_dim);
  Vec dhs(dc.begin() + sh.ref_dim, dc.end());

  // Static encoder stack.
  for (std::size_t l = p.static_w.size(); l-- > 0;) {
    const Vec& pre = cache.static_pre[l];
    Vec dpre(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) dpre[i] = (pre[i] > 0.0) ? dhs[i] : 0.0;
    const Vec& in = (l == 0) ? cache.input.descriptor : cache.static_act[l - 1];
    add_outer(grad.static_w[l], 1.0, dpre, in);
    axpy(1.0, dpre, grad.static_b[l]);
    dhs = tmatvec(p.static_w[l], dpre);
  }

  // Aggregator, newest step first.
  std::vector<Vec> dfused(cache.fused.size());
  for (std::size_t step = cache.agg_caches.size(); step-- > 0;) {
    Vec dx;
    Vec dh_prev;
    gru_backward(p.agg, cache.agg_caches[step], dha, grad.agg, dh_prev, dx);
    dfused[cache.order[step]] = std::move(dx);
    dha = std::move(dh_prev);
  }

  // Fusion, then each reference encoder.
  for (std::size_t k = 0; k < cache.fused.size(); ++k) {
    Vec dhk;
    double w = cache.input.weights[k];
    if (sh.fusion == Fusion::Scaled) {
      dhk.resize(dfused[k].size());
      for (std::size_t i = 0; i < dhk.size(); ++i) dhk[i] = w * dfused[k][i];
    } else {
      const Vec& pre = cache.fuse_pre[k];
      Vec dpre(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) dpre[i] = (pre[i] > 0.0) ? dfused[k][i] : 0.0;
      Vec hw = cache.ref_embed[k];
      hw.push_back(w);
      add_outer(grad.fuse_w, 1.0, dpre, hw);
      axpy(1.0, dpre, grad.fuse_b);
      Vec dhw = tmatvec(p.fuse_w, dpre);
      dhk.assign(dhw.begin(), dhw.begin() + sh.ref_dim);
    }
    for (std::size_t step = cache.ref_caches[k].size(); step-- > 0;) {
      Vec dh_prev, dx;
      gru_backward(p.ref_enc, cache.ref_caches[k][step], dhk, grad.ref_enc, dh_prev, dx);
      dhk = std::move(dh_prev);
    }
  }
}

}  // namespace lifecast
