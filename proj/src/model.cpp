#include "lifecast/model.hpp"

#include <cstring>
#include <stdexcept>

#include <json.hpp>

namespace lifecast {

Fusion fusion_from_string(const std::string& s) {
  if (s == "scaled") return Fusion::Scaled;
  if (s == "learned") return Fusion::Learned;
  throw std::invalid_argument("unknown fusion variant: " + s);
}

std::string to_string(Fusion f) { return f == Fusion::Scaled ? "scaled" : "learned"; }

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, RngStream rng) {
  Matrix m(rows, cols);
  double s = scale / std::sqrt(static_cast<double>(cols));
  for (double& x : m.raw()) x = s * rng.gaussian();
  return m;
}

}  // namespace

ModelParameters model_init(const ModelShape& shape, double scale, std::uint64_t seed) {
  ModelParameters p;
  p.shape = shape;
  RngStream root(seed);
  p.ref_enc = gru_init(shape.value_dim, shape.ref_dim, scale, root.substream("ref_enc"));
  if (shape.fusion == Fusion::Learned) {
    p.fuse_w = random_matrix(shape.ref_dim, shape.ref_dim + 1, scale, root.substream("fuse_w"));
    p.fuse_b.assign(shape.ref_dim, 0.0);
  }
  p.agg = gru_init(shape.ref_dim, shape.ref_dim, scale, root.substream("agg"));
  for (std::size_t l = 0; l < shape.static_depth; ++l) {
    std::size_t in = (l == 0) ? shape.desc_dim : shape.static_dim;
    p.static_w.push_back(
        random_matrix(shape.static_dim, in, scale, root.substream("static" + std::to_string(l))));
    p.static_b.emplace_back(shape.static_dim, 0.0);
  }
  p.init_w = random_matrix(shape.hidden_dim, shape.context_dim(), scale, root.substream("init_w"));
  p.init_b.assign(shape.hidden_dim, 0.0);
  p.trans = gru_init(shape.trans_input_dim(), shape.hidden_dim, scale, root.substream("trans"));

  ScoreNetShape ss;
  ss.value_dim = shape.value_dim;
  ss.channels = shape.channels;
  ss.blocks = shape.blocks;
  ss.window = shape.window;
  ss.cond_dim = shape.cond_dim();
  p.score = scorenet_init(ss, scale, root.substream("score"));
  return p;
}

ModelParameters model_zeros_like(const ModelParameters& p) {
  ModelParameters g;
  g.shape = p.shape;
  g.ref_enc = gru_zeros_like(p.ref_enc);
  if (p.shape.fusion == Fusion::Learned) {
    g.fuse_w = Matrix(p.fuse_w.rows(), p.fuse_w.cols());
    g.fuse_b.assign(p.fuse_b.size(), 0.0);
  }
  g.agg = gru_zeros_like(p.agg);
  for (std::size_t l = 0; l < p.static_w.size(); ++l) {
    g.static_w.emplace_back(p.static_w[l].rows(), p.static_w[l].cols());
    g.static_b.emplace_back(p.static_b[l].size(), 0.0);
  }
  g.init_w = Matrix(p.init_w.rows(), p.init_w.cols());
  g.init_b.assign(p.init_b.size(), 0.0);
  g.trans = gru_zeros_like(p.trans);
  g.score = scorenet_zeros_like(p.score);
  return g;
}

namespace {

template <typename P, typename Fn>
void visit_gru(P& g, const std::string& prefix, const Fn& fn) {
  fn(prefix + ".Wz", g.Wz.raw());
  fn(prefix + ".Wr", g.Wr.raw());
  fn(prefix + ".Wh", g.Wh.raw());
  fn(prefix + ".Uz", g.Uz.raw());
  fn(prefix + ".Ur", g.Ur.raw());
  fn(prefix + ".Uh", g.Uh.raw());
  fn(prefix + ".bz", g.bz);
  fn(prefix + ".br", g.br);
  fn(prefix + ".bh", g.bh);
}

template <typename P, typename Fn>
void visit_all(P& p, const Fn& fn) {
  visit_gru(p.ref_enc, "ref_enc", fn);
  if (p.shape.fusion == Fusion::Learned) {
    fn("fuse.w", p.fuse_w.raw());
    fn("fuse.b", p.fuse_b);
  }
  visit_gru(p.agg, "agg", fn);
  for (std::size_t l = 0; l < p.static_w.size(); ++l) {
    fn("static" + std::to_string(l) + ".w", p.static_w[l].raw());
    fn("static" + std::to_string(l) + ".b", p.static_b[l]);
  }
  fn("init.w", p.init_w.raw());
  fn("init.b", p.init_b);
  visit_gru(p.trans, "trans", fn);
  fn("score.in_w", p.score.in_w.raw());
  fn("score.in_b", p.score.in_b);
  for (std::size_t l = 0; l < p.score.blocks.size(); ++l) {
    auto& b = p.score.blocks[l];
    for (std::size_t j = 0; j < b.taps.size(); ++j)
      fn("score.block" + std::to_string(l) + ".tap" + std::to_string(j), b.taps[j].raw());
    fn("score.block" + std::to_string(l) + ".bias", b.bias);
    fn("score.block" + std::to_string(l) + ".cond", b.cond.raw());
  }
  fn("score.out_w", p.score.out_w.raw());
  fn("score.out_b", p.score.out_b);
}

}  // namespace

void for_each_param(ModelParameters& p, const ParamVisitor& fn) { visit_all(p, fn); }

void for_each_param(const ModelParameters& p, const ConstParamVisitor& fn) { visit_all(p, fn); }

std::size_t param_count(const ModelParameters& p) {
  std::size_t n = 0;
  for_each_param(p, [&](const std::string&, const Vec& v) { n += v.size(); });
  return n;
}

std::uint64_t param_hash(const ModelParameters& p, bool skip_fusion) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ULL;
    }
  };
  for_each_param(p, [&](const std::string& name, const Vec& v) {
    if (skip_fusion && name.rfind("fuse.", 0) == 0) return;
    feed(name.data(), name.size());
    feed(v.data(), v.size() * sizeof(double));
  });
  return h;
}

std::string params_to_json(const ModelParameters& p) {
  nlohmann::json j;
  j["shape"] = {{"value_dim", p.shape.value_dim},     {"desc_dim", p.shape.desc_dim},
                {"ref_dim", p.shape.ref_dim},         {"static_dim", p.shape.static_dim},
                {"hidden_dim", p.shape.hidden_dim},   {"channels", p.shape.channels},
                {"blocks", p.shape.blocks},           {"window", p.shape.window},
                {"embed_width", p.shape.embed_width}, {"static_depth", p.shape.static_depth},
                {"fusion", to_string(p.shape.fusion)}};
  nlohmann::json groups;
  for_each_param(p, [&](const std::string& name, const Vec& v) { groups[name] = v; });
  j["params"] = std::move(groups);
  return j.dump();
}

ModelParameters params_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const auto& s = j.at("shape");
  ModelShape shape;
  shape.value_dim = s.at("value_dim");
  shape.desc_dim = s.at("desc_dim");
  shape.ref_dim = s.at("ref_dim");
  shape.static_dim = s.at("static_dim");
  shape.hidden_dim = s.at("hidden_dim");
  shape.channels = s.at("channels");
  shape.blocks = s.at("blocks");
  shape.window = s.at("window");
  shape.embed_width = s.at("embed_width");
  shape.static_depth = s.at("static_depth");
  shape.fusion = fusion_from_string(s.at("fusion"));

  ModelParameters p = model_zeros_like(model_init(shape, 0.0, 0));
  const auto& groups = j.at("params");
  for_each_param(p, [&](const std::string& name, Vec& v) {
    const auto it = groups.find(name);
    if (it == groups.end()) throw std::invalid_argument("model json missing group " + name);
    std::vector<double> vals = it->get<std::vector<double>>();
    if (vals.size() != v.size())
      throw std::invalid_argument("model json group " + name + " has wrong size");
    v = std::move(vals);
  });
  return p;
}

}  // namespace lifecast
