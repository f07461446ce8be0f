#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifecast/linalg.hpp"

namespace lifecast {

// One life-cycle series: a time-indexed value sequence plus the raw static
// descriptor fields shared by all of its rows.
struct SeriesRecord {
  std::string id;
  std::vector<long long> times;
  Vec values;
  std::vector<std::string> descriptors;  // one entry per descriptor column, "" = missing

  // Inverse-transform metadata, populated by the preprocessing passes.
  double max_value = 0.0;  // max-normalization divisor
};

enum class TransformKind { None, MaxNormalize, LogIncrement };
std::string to_string(TransformKind k);
TransformKind transform_from_string(const std::string& s);

struct PanelDataset {
  std::vector<std::string> desc_columns;  // header names (each starts with "desc_")
  std::vector<SeriesRecord> series;
  TransformKind transform = TransformKind::None;
};

// CSV schema: header `series_id,t,value[,desc_*...]`; UTF-8, '.' decimal,
// LF line endings. Validation failures report 1-based row numbers.
PanelDataset load_panel(const std::string& path);
void save_panel(const std::string& path, const PanelDataset& dataset);

// Divides each series by its own maximum (stored for inversion) and re-indexes
// time from launch (1..n). Series whose maximum is 0 are dropped with a warning.
PanelDataset normalize_max_align(const PanelDataset& in, std::vector<std::string>* warnings = nullptr);

// First-differences a cumulative count series and applies x = log(1 + delta),
// with delta_1 = 0. Negative increments are floored at 0 with a warning;
// negative cumulative values are an error. Inverse: exp(x) - 1.
PanelDataset log_increment_transform(const PanelDataset& in, std::vector<std::string>* warnings = nullptr);

// Maps a transformed value back to raw units for one series.
double inverse_transform_value(const PanelDataset& dataset, const SeriesRecord& series, double x);

// Splits each series at gaps in its time index, keeps episodes of length
// >= min_len, re-aligns each to its own origin. Episode ids get a "#k" suffix.
PanelDataset segment_episodes(const PanelDataset& in, std::size_t min_len = 10,
                              std::vector<std::string>* warnings = nullptr);

// Fixed per-model encoding of raw descriptor fields into a numeric vector:
// numerics z-scored against the fitted library (missing -> library mean),
// categoricals one-hot with a dedicated trailing "unknown" slot.
struct DescriptorEncoder {
  struct Column {
    std::string name;
    bool numeric = false;
    double mean = 0.0;
    double stddev = 1.0;
    std::vector<std::string> categories;  // sorted; one-hot width = size + 1
  };
  std::vector<Column> columns;

  std::size_t dim() const;
  Vec encode(const std::vector<std::string>& raw) const;
};

DescriptorEncoder fit_descriptor_encoder(const PanelDataset& train);
nlohmann::json encoder_to_json(const DescriptorEncoder& enc);
DescriptorEncoder encoder_from_json(const nlohmann::json& j);

// Desk-scale synthetic panel: Bass-shaped adoption curves whose peak time and
// height are driven by three descriptors (category label, numeric scale,
// access flag), with multiplicative noise. Peak height is exactly monotone in
// the scale descriptor by construction.
PanelDataset generate_synthetic(std::size_t n_series, std::size_t horizon, std::uint64_t seed,
                                const std::string& family = "bass");

}  // namespace lifecast
