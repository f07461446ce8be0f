#include "lifecast/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lifecast/rng.hpp"

namespace lifecast {

std::string to_string(TransformKind k) {
  switch (k) {
    case TransformKind::None: return "none";
    case TransformKind::MaxNormalize: return "max-normalize";
    case TransformKind::LogIncrement: return "log-increment";
  }
  return "?";
}

TransformKind transform_from_string(const std::string& s) {
  if (s == "none") return TransformKind::None;
  if (s == "max-normalize") return TransformKind::MaxNormalize;
  if (s == "log-increment") return TransformKind::LogIncrement;
  throw std::invalid_argument("unknown transform: " + s);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

bool parse_ll(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void panel_error(std::size_t row, const std::string& what) {
  throw std::runtime_error("panel row " + std::to_string(row) + ": " + what);
}

}  // namespace

PanelDataset load_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("panel file is empty: " + path);
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "series_id" || header[1] != "t" || header[2] != "value")
    throw std::runtime_error("panel header must start with series_id,t,value");

  PanelDataset ds;
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (header[i].rfind("desc_", 0) != 0)
      throw std::runtime_error("panel descriptor columns must be named desc_*: " + header[i]);
    ds.desc_columns.push_back(header[i]);
  }

  std::map<std::string, std::size_t> index;          // id -> slot in ds.series
  std::map<std::string, std::set<long long>> seen;   // id -> time stamps
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) panel_error(row, "expected " + std::to_string(header.size()) + " fields");

    const std::string& id = f[0];
    if (id.empty()) panel_error(row, "empty series_id");
    long long t = 0;
    double v = 0.0;
    if (!parse_ll(f[1], t)) panel_error(row, "non-integer t: '" + f[1] + "'");
    if (!parse_double(f[2], v)) panel_error(row, "non-numeric value: '" + f[2] + "'");
    std::vector<std::string> desc(f.begin() + 3, f.end());

    auto it = index.find(id);
    if (it == index.end()) {
      index.emplace(id, ds.series.size());
      SeriesRecord rec;
      rec.id = id;
      rec.descriptors = desc;
      ds.series.push_back(std::move(rec));
      it = index.find(id);
    } else if (ds.series[it->second].descriptors != desc) {
      panel_error(row, "descriptor block differs from earlier rows of series '" + id + "'");
    }
    if (!seen[id].insert(t).second) panel_error(row, "duplicate (series_id, t) = ('" + id + "', " + std::to_string(t) + ")");
    ds.series[it->second].times.push_back(t);
    ds.series[it->second].values.push_back(v);
  }
  if (ds.series.empty()) throw std::runtime_error("panel file has no data rows: " + path);

  for (SeriesRecord& rec : ds.series) {
    // Order rows by time regardless of file order.
    std::vector<std::size_t> order(rec.times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rec.times[a] < rec.times[b]; });
    std::vector<long long> times(order.size());
    Vec values(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      times[i] = rec.times[order[i]];
      values[i] = rec.values[order[i]];
    }
    rec.times = std::move(times);
    rec.values = std::move(values);
  }
  return ds;
}

void save_panel(const std::string& path, const PanelDataset& dataset) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw std::runtime_error("cannot write panel file: " + path);
  out << "series_id,t,value";
  for (const std::string& c : dataset.desc_columns) out << ',' << c;
  out << '\n';
  for (const SeriesRecord& rec : dataset.series) {
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
      out << rec.id << ',' << rec.times[i] << ',' << fmt_double(rec.values[i]);
      for (const std::string& d : rec.descriptors) out << ',' << d;
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PanelDataset normalize_max_align(const PanelDataset& in, std::vector<std::string>* warnings) {
  if (in.transform != TransformKind::None)
    throw std::invalid_argument("normalize_max_align: panel already transformed");
  PanelDataset out;
  out.desc_columns = in.desc_columns;
  out.transform = TransformKind::MaxNormalize;
  for (const SeriesRecord& rec : in.series) {
    if (rec.values.empty()) continue;
    const double mx = *std::max_element(rec.values.begin(), rec.values.end());
    if (mx <= 0.0) {
      if (warnings) warnings->push_back("series '" + rec.id + "' has max <= 0; dropped");
      continue;
    }
    SeriesRecord r = rec;
    r.max_value = mx;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      r.values[i] = rec.values[i] / mx;
      r.times[i] = static_cast<long long>(i) + 1;  // launch-aligned week index
    }
    out.series.push_back(std::move(r));
  }
  return out;
}

PanelDataset log_increment_transform(const PanelDataset& in, std::vector<std::string>* warnings) {
  if (in.transform != TransformKind::None)
    throw std::invalid_argument("log_increment_transform: panel already transformed");
  PanelDataset out;
  out.desc_columns = in.desc_columns;
  out.transform = TransformKind::LogIncrement;
  for (const SeriesRecord& rec : in.series) {
    if (rec.values.empty()) continue;
    SeriesRecord r = rec;
    for (std::size_t i = 0; i < rec.values.size(); ++i) {
      if (rec.values[i] < 0.0)
        throw std::runtime_error("series '" + rec.id + "': negative cumulative value at t=" +
                                 std::to_string(rec.times[i]));
      double delta = i == 0 ? 0.0 : rec.values[i] - rec.values[i - 1];
      if (delta < 0.0) {
        if (warnings)
          warnings->push_back("series '" + rec.id + "': negative increment at t=" +
                              std::to_string(rec.times[i]) + " floored to 0");
        delta = 0.0;
      }
      r.values[i] = std::log1p(delta);
      r.times[i] = static_cast<long long>(i) + 1;
    }
    out.series.push_back(std::move(r));
  }
  return out;
}

double inverse_transform_value(const PanelDataset& dataset, const SeriesRecord& series, double x) {
  switch (dataset.transform) {
    case TransformKind::None: return x;
    case TransformKind::MaxNormalize: return x * series.max_value;
    case TransformKind::LogIncrement: return std::expm1(x);
  }
  return x;
}

PanelDataset segment_episodes(const PanelDataset& in, std::size_t min_len,
                              std::vector<std::string>* warnings) {
  PanelDataset out;
  out.desc_columns = in.desc_columns;
  out.transform = in.transform;
  for (const SeriesRecord& rec : in.series) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end)
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= rec.times.size(); ++i) {
      if (i == rec.times.size() || rec.times[i] != rec.times[i - 1] + 1) {
        spans.emplace_back(begin, i);
        begin = i;
      }
    }
    std::size_t episode = 0;
    for (auto [b, e] : spans) {
      if (e - b < min_len) continue;
      ++episode;
      SeriesRecord ep;
      ep.id = rec.id + "#" + std::to_string(episode);
      ep.descriptors = rec.descriptors;
      ep.max_value = rec.max_value;
      for (std::size_t i = b; i < e; ++i) {
        ep.times.push_back(static_cast<long long>(i - b) + 1);
        ep.values.push_back(rec.values[i]);
      }
      out.series.push_back(std::move(ep));
    }
    if (episode == 0 && warnings)
      warnings->push_back("series '" + rec.id + "': no episode reaches length " + std::to_string(min_len));
  }
  return out;
}

std::size_t DescriptorEncoder::dim() const {
  std::size_t d = 0;
  for (const Column& c : columns) d += c.numeric ? 1 : c.categories.size() + 1;
  return d;
}

Vec DescriptorEncoder::encode(const std::vector<std::string>& raw) const {
  if (raw.size() != columns.size())
    throw std::invalid_argument("descriptor encode: expected " + std::to_string(columns.size()) +
                                " fields, got " + std::to_string(raw.size()));
  Vec v;
  v.reserve(dim());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const Column& c = columns[i];
    if (c.numeric) {
      double x = 0.0;
      if (raw[i].empty() || !parse_double(raw[i], x)) {
        v.push_back(0.0);  // library-mean imputation in z-score units
      } else {
        v.push_back((x - c.mean) / c.stddev);
      }
    } else {
      const std::size_t width = c.categories.size() + 1;
      std::size_t slot = width - 1;  // unknown
      if (!raw[i].empty()) {
        auto it = std::lower_bound(c.categories.begin(), c.categories.end(), raw[i]);
        if (it != c.categories.end() && *it == raw[i])
          slot = static_cast<std::size_t>(it - c.categories.begin());
      }
      for (std::size_t k = 0; k < width; ++k) v.push_back(k == slot ? 1.0 : 0.0);
    }
  }
  return v;
}

DescriptorEncoder fit_descriptor_encoder(const PanelDataset& train) {
  DescriptorEncoder enc;
  for (std::size_t col = 0; col < train.desc_columns.size(); ++col) {
    DescriptorEncoder::Column c;
    c.name = train.desc_columns[col];
    bool numeric = true;
    std::vector<double> nums;
    std::set<std::string> cats;
    for (const SeriesRecord& rec : train.series) {
      if (col >= rec.descriptors.size()) throw std::invalid_argument("series missing descriptor fields");
      const std::string& raw = rec.descriptors[col];
      if (raw.empty()) continue;  // missing: does not decide the column type
      double x = 0.0;
      if (parse_double(raw, x)) {
        nums.push_back(x);
      } else {
        numeric = false;
      }
      cats.insert(raw);
    }
    c.numeric = numeric && !nums.empty();
    if (c.numeric) {
      double mean = 0.0;
      for (double x : nums) mean += x;
      mean /= static_cast<double>(nums.size());
      double var = 0.0;
      for (double x : nums) var += (x - mean) * (x - mean);
      var /= static_cast<double>(nums.size());
      c.mean = mean;
      c.stddev = var > 1e-24 ? std::sqrt(var) : 1.0;
    } else {
      c.categories.assign(cats.begin(), cats.end());  // sorted by std::set
    }
    enc.columns.push_back(std::move(c));
  }
  return enc;
}

nlohmann::json encoder_to_json(const DescriptorEncoder& enc) {
  nlohmann::json cols = nlohmann::json::array();
  for (const DescriptorEncoder::Column& c : enc.columns) {
    cols.push_back({{"name", c.name},
                    {"numeric", c.numeric},
                    {"mean", c.mean},
                    {"stddev", c.stddev},
                    {"categories", c.categories}});
  }
  return nlohmann::json{{"columns", cols}};
}

DescriptorEncoder encoder_from_json(const nlohmann::json& j) {
  DescriptorEncoder enc;
  for (const nlohmann::json& jc : j.at("columns")) {
    DescriptorEncoder::Column c;
    c.name = jc.at("name").get<std::string>();
    c.numeric = jc.at("numeric").get<bool>();
    c.mean = jc.at("mean").get<double>();
    c.stddev = jc.at("stddev").get<double>();
    c.categories = jc.at("categories").get<std::vector<std::string>>();
    enc.columns.push_back(std::move(c));
  }
  return enc;
}

PanelDataset generate_synthetic(std::size_t n_series, std::size_t horizon, std::uint64_t seed,
                                const std::string& family) {
  if (family != "bass") throw std::invalid_argument("unknown synthetic family: " + family);
  PanelDataset ds;
  ds.desc_columns = {"desc_category", "desc_scale", "desc_access"};
  if (n_series == 0 || horizon == 0) return ds;

  // Categories span slow/medium/fast adopters, so peak times spread across
  // the horizon and the cross-sectional ensemble is genuinely heterogeneous
  // while same-category references stay informative.
  static const char* kCategories[3] = {"alpha", "beta", "gamma"};
  static const double kInnovation[3] = {0.010, 0.032, 0.11};
  static const double kImitation[3] = {0.30, 0.45, 0.60};

  RngStream root(seed);
  for (std::size_t i = 0; i < n_series; ++i) {
    RngStream rng = root.substream(i);
    const std::size_t cat = rng.uniform_index(3);
    const bool access = rng.uniform() < 0.5;
    const double scale = 0.5 + 2.0 * rng.uniform();

    const double p = kInnovation[cat] * (1.0 + 0.2 * rng.uniform());
    const double q = kImitation[cat] + 0.1 * rng.uniform() + (access ? 0.1 : 0.0);

    SeriesRecord rec;
    rec.id = "syn" + std::to_string(i);
    rec.descriptors = {kCategories[cat], fmt_double(scale), access ? "1" : "0"};

    // Bass adoption increments with multiplicative noise, then rescaled so the
    // realized peak equals 40 * (1 + scale): peak height is exactly monotone
    // in the scale descriptor.
    Vec raw(horizon);
    auto bass_cdf = [&](double t) {
      const double e = std::exp(-(p + q) * t);
      return (1.0 - e) / (1.0 + (q / p) * e);
    };
    double mx = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
      const double inc = bass_cdf(static_cast<double>(t)) - bass_cdf(static_cast<double>(t) - 1.0);
      const double noisy = inc * std::exp(0.15 * rng.gaussian());
      raw[t - 1] = noisy;
      mx = std::max(mx, noisy);
    }
    const double peak = 40.0 * (1.0 + scale);
    for (std::size_t t = 0; t < horizon; ++t) {
      rec.times.push_back(static_cast<long long>(t) + 1);
      rec.values.push_back(raw[t] / mx * peak);
    }
    ds.series.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace lifecast
