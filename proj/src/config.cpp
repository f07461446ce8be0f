#include "lifecast/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lifecast {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size()) throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
  return x;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || x < 0)
    throw std::invalid_argument("config key '" + key + "': not a nonnegative integer: '" + v + "'");
  return static_cast<std::size_t>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size()) throw std::invalid_argument("config key '" + key + "': not an unsigned integer: '" + v + "'");
  return x;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"refs_k", [](RunConfig& c, const std::string& k, const std::string& v) { c.refs_k = to_size(k, v); }},
      {"gamma", [](RunConfig& c, const std::string& k, const std::string& v) { c.gamma = to_double(k, v); }},
      {"fusion", [](RunConfig& c, const std::string&, const std::string& v) { c.fusion = v; }},
      {"hidden_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.hidden_dim = to_size(k, v); }},
      {"ref_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.ref_dim = to_size(k, v); }},
      {"static_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.static_dim = to_size(k, v); }},
      {"channels", [](RunConfig& c, const std::string& k, const std::string& v) { c.channels = to_size(k, v); }},
      {"blocks", [](RunConfig& c, const std::string& k, const std::string& v) { c.blocks = to_size(k, v); }},
      {"window", [](RunConfig& c, const std::string& k, const std::string& v) { c.window = to_size(k, v); }},
      {"embed_width", [](RunConfig& c, const std::string& k, const std::string& v) { c.embed_width = to_size(k, v); }},
      {"static_depth", [](RunConfig& c, const std::string& k, const std::string& v) { c.static_depth = to_size(k, v); }},
      {"init_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.init_scale = to_double(k, v); }},
      {"diffusion_steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.diffusion_steps = to_size(k, v); }},
      {"beta_start", [](RunConfig& c, const std::string& k, const std::string& v) { c.beta_start = to_double(k, v); }},
      {"beta_end", [](RunConfig& c, const std::string& k, const std::string& v) { c.beta_end = to_double(k, v); }},
      {"value_clip", [](RunConfig& c, const std::string& k, const std::string& v) { c.value_clip = to_double(k, v); }},
      {"lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.lr = to_double(k, v); }},
      {"train_steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.train_steps = to_size(k, v); }},
      {"batch", [](RunConfig& c, const std::string& k, const std::string& v) { c.batch = to_size(k, v); }},
      {"plateau_window", [](RunConfig& c, const std::string& k, const std::string& v) { c.plateau_window = to_size(k, v); }},
      {"enforce_interval", [](RunConfig& c, const std::string& k, const std::string& v) { c.enforce_interval = to_size(k, v); }},
      {"target_kappa", [](RunConfig& c, const std::string& k, const std::string& v) { c.target_kappa = to_double(k, v); }},
      {"lp", [](RunConfig& c, const std::string& k, const std::string& v) { c.lp = to_double(k, v); }},
      {"nonfinite_limit", [](RunConfig& c, const std::string& k, const std::string& v) { c.nonfinite_limit = to_size(k, v); }},
      {"mode", [](RunConfig& c, const std::string&, const std::string& v) { c.mode = v; }},
      {"t0", [](RunConfig& c, const std::string& k, const std::string& v) { c.t0 = to_size(k, v); }},
      {"horizon", [](RunConfig& c, const std::string& k, const std::string& v) { c.horizon = to_size(k, v); }},
      {"samples", [](RunConfig& c, const std::string& k, const std::string& v) { c.samples = to_size(k, v); }},
      {"stride", [](RunConfig& c, const std::string& k, const std::string& v) { c.stride = to_size(k, v); }},
      {"train_frac", [](RunConfig& c, const std::string& k, const std::string& v) { c.train_frac = to_double(k, v); }},
      {"bands", [](RunConfig& c, const std::string&, const std::string& v) { c.bands = v; }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(row) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end())
      throw std::invalid_argument("config line " + std::to_string(row) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void validate_config(const RunConfig& cfg) {
  auto req = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  req(cfg.refs_k >= 1, "refs_k must be >= 1");
  req(cfg.gamma >= 0.0, "gamma must be >= 0");
  req(cfg.fusion == "scaled" || cfg.fusion == "learned", "fusion must be 'scaled' or 'learned'");
  req(cfg.hidden_dim >= 1 && cfg.ref_dim >= 1 && cfg.static_dim >= 1, "model dims must be >= 1");
  req(cfg.channels >= 1 && cfg.blocks >= 1 && cfg.window >= 1, "score-net dims must be >= 1");
  req(cfg.embed_width >= 2 && cfg.embed_width % 2 == 0, "embed_width must be even and >= 2");
  req(cfg.static_depth >= 1, "static_depth must be >= 1");
  req(cfg.init_scale > 0.0, "init_scale must be positive");
  req(cfg.diffusion_steps >= 1, "diffusion_steps must be >= 1");
  req(cfg.beta_start > 0.0 && cfg.beta_start <= cfg.beta_end && cfg.beta_end < 1.0,
      "need 0 < beta_start <= beta_end < 1");
  req(cfg.value_clip > 0.0, "value_clip must be positive");
  req(cfg.lr > 0.0, "lr must be positive");
  req(cfg.batch >= 1, "batch must be >= 1");
  req(cfg.target_kappa > 0.0 && cfg.target_kappa < 1.0, "target_kappa must be in (0,1)");
  req(cfg.lp > 0.0, "lp must be positive");
  req(cfg.mode == "pre-launch" || cfg.mode == "post-launch", "mode must be 'pre-launch' or 'post-launch'");
  req(cfg.t0 >= 1, "t0 must be >= 1");
  req(cfg.mode != "pre-launch" || cfg.t0 == 1, "pre-launch mode requires t0 = 1");
  req(cfg.horizon >= 1, "horizon must be >= 1");
  req(cfg.t0 <= cfg.horizon, "t0 must be <= horizon");
  req(cfg.samples >= 1, "samples must be >= 1");
  req(cfg.stride >= 1, "stride must be >= 1");
  req(cfg.train_frac > 0.0 && cfg.train_frac < 1.0, "train_frac must be in (0,1)");
  parse_bands(cfg.bands);  // throws on malformed band spec
}

std::vector<HorizonBand> parse_bands(const std::string& spec) {
  std::vector<HorizonBand> bands;
  std::istringstream in(spec);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const std::size_t dash = part.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 >= part.size())
      throw std::invalid_argument("bad horizon band '" + part + "' (want lo-hi, 1-based inclusive)");
    const std::size_t lo = to_size("bands", trim(part.substr(0, dash)));
    const std::size_t hi = to_size("bands", trim(part.substr(dash + 1)));
    if (lo < 1 || hi < lo) throw std::invalid_argument("bad horizon band '" + part + "'");
    bands.push_back(HorizonBand{lo - 1, hi, part});
  }
  if (bands.empty()) throw std::invalid_argument("empty horizon band spec");
  return bands;
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "# reference selection / context\n"
      << "refs_k = " << c.refs_k << "\n"
      << "gamma = " << num(c.gamma) << "\n"
      << "fusion = " << c.fusion << "\n"
      << "# model dimensions\n"
      << "hidden_dim = " << c.hidden_dim << "\n"
      << "ref_dim = " << c.ref_dim << "\n"
      << "static_dim = " << c.static_dim << "\n"
      << "channels = " << c.channels << "\n"
      << "blocks = " << c.blocks << "\n"
      << "window = " << c.window << "\n"
      << "embed_width = " << c.embed_width << "\n"
      << "static_depth = " << c.static_depth << "\n"
      << "init_scale = " << num(c.init_scale) << "\n"
      << "# diffusion\n"
      << "diffusion_steps = " << c.diffusion_steps << "\n"
      << "beta_start = " << num(c.beta_start) << "\n"
      << "beta_end = " << num(c.beta_end) << "\n"
      << "value_clip = " << num(c.value_clip) << "\n"
      << "# training\n"
      << "lr = " << num(c.lr) << "\n"
      << "train_steps = " << c.train_steps << "\n"
      << "batch = " << c.batch << "\n"
      << "plateau_window = " << c.plateau_window << "\n"
      << "enforce_interval = " << c.enforce_interval << "\n"
      << "target_kappa = " << num(c.target_kappa) << "\n"
      << "lp = " << num(c.lp) << "\n"
      << "nonfinite_limit = " << c.nonfinite_limit << "\n"
      << "# evaluation protocol\n"
      << "mode = " << c.mode << "\n"
      << "t0 = " << c.t0 << "\n"
      << "horizon = " << c.horizon << "\n"
      << "samples = " << c.samples << "\n"
      << "stride = " << c.stride << "\n"
      << "train_frac = " << num(c.train_frac) << "\n"
      << "bands = " << c.bands << "\n"
      << "seed = " << c.seed << "\n";
  return out.str();
}

}  // namespace lifecast
