#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "lifecast/panel.hpp"

using namespace lifecast;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "lifecast_unit";
  fs::create_directories(dir);
  return dir;
}

fs::path write_text(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << body;
  return p;
}

PanelDataset two_series_panel() {
  PanelDataset ds;
  ds.desc_columns = {"desc_price", "desc_cat"};
  SeriesRecord a;
  a.id = "a";
  a.times = {1, 2, 3};
  a.values = {0.125, 2.5, 1.0 / 3.0};
  a.descriptors = {"1.5", "red"};
  SeriesRecord b;
  b.id = "b";
  b.times = {1, 2};
  b.values = {4.0, 0.0625};
  b.descriptors = {"", "blue"};
  ds.series = {a, b};
  return ds;
}

}  // namespace

TEST_CASE("panel CSV round trip preserves everything") {
  const PanelDataset ds = two_series_panel();
  const fs::path p = scratch_dir() / "roundtrip.csv";
  save_panel(p.string(), ds);
  PanelDataset got = load_panel(p.string());
  REQUIRE(got.series.size() == 2);
  CHECK(got.desc_columns == ds.desc_columns);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(got.series[i].id == ds.series[i].id);
    CHECK(got.series[i].times == ds.series[i].times);
    CHECK(got.series[i].values == ds.series[i].values);  // %.17g is lossless
    CHECK(got.series[i].descriptors == ds.series[i].descriptors);
  }
}

TEST_CASE("panel validation failures name the offending row") {
  const std::string head = "series_id,t,value\n";
  auto expect_row = [&](const std::string& name, const std::string& body, const char* needle) {
    const fs::path p = write_text(name, body);
    try {
      load_panel(p.string());
      FAIL("expected a parse error for ", name);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_row("dup.csv", head + "a,1,0.5\na,2,0.6\na,2,0.7\n", "panel row 4");
  expect_row("badnum.csv", head + "a,1,0.5\na,2,oops\n", "panel row 3");
  expect_row("badtime.csv", head + "a,x,0.5\n", "panel row 2");

  const fs::path bad_header = write_text("hdr.csv", "id,t,value\na,1,2\n");
  CHECK_THROWS_WITH_AS(load_panel(bad_header.string()),
                       doctest::Contains("header must start with series_id,t,value"),
                       std::runtime_error);
  const fs::path bad_desc = write_text("desc.csv", "series_id,t,value,price\na,1,2\n");
  CHECK_THROWS_WITH_AS(load_panel(bad_desc.string()), doctest::Contains("desc_"),
                       std::runtime_error);
  const fs::path empty = write_text("empty.csv", "");
  CHECK_THROWS_AS(load_panel(empty.string()), std::runtime_error);
  CHECK_THROWS_AS(load_panel((scratch_dir() / "missing.csv").string()), std::runtime_error);

  // Descriptor fields must be constant within a series.
  expect_row("inconsistent.csv",
             "series_id,t,value,desc_cat\na,1,0.5,x\na,2,0.6,y\n", "panel row 3");
}

TEST_CASE("max normalization divides by the peak and re-aligns time") {
  PanelDataset ds;
  ds.desc_columns = {};
  SeriesRecord a;
  a.id = "a";
  a.times = {5, 6, 7};
  a.values = {2.0, 4.0, 1.0};
  a.descriptors = {};
  SeriesRecord z;
  z.id = "z";
  z.times = {1, 2};
  z.values = {0.0, 0.0};
  z.descriptors = {};
  ds.series = {a, z};

  std::vector<std::string> warnings;
  PanelDataset out = normalize_max_align(ds, &warnings);
  REQUIRE(out.series.size() == 1);  // the all-zero series is dropped
  CHECK(warnings.size() == 1);
  CHECK(out.transform == TransformKind::MaxNormalize);
  CHECK(out.series[0].max_value == doctest::Approx(4.0));
  CHECK(out.series[0].values[0] == doctest::Approx(0.5));
  CHECK(out.series[0].values[1] == doctest::Approx(1.0));
  CHECK(out.series[0].times == std::vector<long long>{1, 2, 3});

  CHECK(inverse_transform_value(out, out.series[0], 0.25) == doctest::Approx(1.0));
  CHECK_THROWS_AS(normalize_max_align(out), std::invalid_argument);
}

TEST_CASE("log-increment transform and its inverse") {
  PanelDataset ds;
  SeriesRecord a;
  a.id = "a";
  a.times = {1, 2, 3, 4};
  a.values = {2.0, 3.0, 5.0, 4.5};  // cumulative counts; last step dips
  a.descriptors = {};
  ds.series = {a};

  std::vector<std::string> warnings;
  PanelDataset out = log_increment_transform(ds, &warnings);
  CHECK(out.transform == TransformKind::LogIncrement);
  CHECK(out.series[0].values[0] == doctest::Approx(0.0));  // launch increment defined as zero
  CHECK(out.series[0].values[1] == doctest::Approx(std::log1p(1.0)));
  CHECK(out.series[0].values[2] == doctest::Approx(std::log1p(2.0)));
  CHECK(out.series[0].values[3] == doctest::Approx(0.0));  // negative increment floored
  CHECK(warnings.size() == 1);
  CHECK(inverse_transform_value(out, out.series[0], std::log1p(2.0)) == doctest::Approx(2.0));

  PanelDataset neg;
  SeriesRecord n;
  n.id = "n";
  n.times = {1};
  n.values = {-1.0};
  n.descriptors = {};
  neg.series = {n};
  CHECK_THROWS_AS(log_increment_transform(neg), std::runtime_error);
}

TEST_CASE("episode segmentation splits on time gaps") {
  PanelDataset ds;
  SeriesRecord a;
  a.id = "a";
  a.times = {1, 2, 3, 10, 11, 12, 13};
  a.values = {1, 2, 3, 4, 5, 6, 7};
  a.descriptors = {};
  ds.series = {a};

  PanelDataset out = segment_episodes(ds, 3);
  REQUIRE(out.series.size() == 2);
  CHECK(out.series[0].id == "a#1");
  CHECK(out.series[1].id == "a#2");
  CHECK(out.series[0].values == Vec{1, 2, 3});
  CHECK(out.series[1].values == Vec{4, 5, 6, 7});
  CHECK(out.series[0].times == std::vector<long long>{1, 2, 3});
  CHECK(out.series[1].times == std::vector<long long>{1, 2, 3, 4});

  // Too-short episodes are dropped; surviving ones are renumbered.
  PanelDataset strict = segment_episodes(ds, 4);
  REQUIRE(strict.series.size() == 1);
  CHECK(strict.series[0].id == "a#1");
  CHECK(strict.series[0].values == Vec{4, 5, 6, 7});

  // A series with no long-enough episode produces a warning.
  std::vector<std::string> warnings;
  PanelDataset none = segment_episodes(ds, 5, &warnings);
  CHECK(none.series.empty());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("'a'") != std::string::npos);
}

TEST_CASE("descriptor encoder handles numerics, categories, and unknowns") {
  const PanelDataset ds = two_series_panel();  // price: {1.5, missing}; cat: {red, blue}
  DescriptorEncoder enc = fit_descriptor_encoder(ds);
  REQUIRE(enc.columns.size() == 2);
  CHECK(enc.columns[0].numeric);
  CHECK(enc.columns[0].mean == doctest::Approx(1.5));  // single observed value
  CHECK_FALSE(enc.columns[1].numeric);
  CHECK(enc.columns[1].categories == std::vector<std::string>{"blue", "red"});
  CHECK(enc.dim() == 1 + 3);  // z-score + one-hot with unknown slot

  const Vec red = enc.encode({"1.5", "red"});
  REQUIRE(red.size() == 4);
  CHECK(red[0] == doctest::Approx(0.0));  // at the library mean
  CHECK(red[1] == doctest::Approx(0.0));
  CHECK(red[2] == doctest::Approx(1.0));
  CHECK(red[3] == doctest::Approx(0.0));

  const Vec other = enc.encode({"", "green"});
  CHECK(other[0] == doctest::Approx(0.0));  // missing numeric -> mean
  CHECK(other[3] == doctest::Approx(1.0));  // unseen category -> unknown slot

  CHECK_THROWS_AS(enc.encode({"1.0"}), std::invalid_argument);

  DescriptorEncoder back = encoder_from_json(encoder_to_json(enc));
  CHECK(back.dim() == enc.dim());
  CHECK(back.encode({"1.5", "red"}) == red);
}

TEST_CASE("numeric descriptor z-scores against the fitted library") {
  PanelDataset ds;
  ds.desc_columns = {"desc_x"};
  for (int i = 0; i < 3; ++i) {
    SeriesRecord r;
    r.id = "s" + std::to_string(i);
    r.times = {1};
    r.values = {1.0};
    r.descriptors = {std::to_string(2 * i)};  // 0, 2, 4 -> mean 2, pop std sqrt(8/3)
    ds.series.push_back(r);
  }
  DescriptorEncoder enc = fit_descriptor_encoder(ds);
  const double sd = std::sqrt(8.0 / 3.0);
  CHECK(enc.columns[0].stddev == doctest::Approx(sd));
  CHECK(enc.encode({"4"})[0] == doctest::Approx(2.0 / sd));
}

TEST_CASE("synthetic generator is reproducible with descriptor-driven peaks") {
  PanelDataset a = generate_synthetic(12, 16, 42);
  PanelDataset b = generate_synthetic(12, 16, 42);
  PanelDataset c = generate_synthetic(12, 16, 43);
  REQUIRE(a.series.size() == 12);
  CHECK(a.desc_columns ==
        std::vector<std::string>{"desc_category", "desc_scale", "desc_access"});
  bool any_diff = false;
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.series[i].values == b.series[i].values);
    CHECK(a.series[i].descriptors == b.series[i].descriptors);
    CHECK(a.series[i].values.size() == 16);
    any_diff = any_diff || a.series[i].values != c.series[i].values;
  }
  CHECK(any_diff);

  // Peak height is exactly monotone in the scale descriptor.
  std::vector<std::pair<double, double>> scale_peak;
  for (const SeriesRecord& r : a.series) {
    double peak = 0.0;
    for (double v : r.values) peak = std::max(peak, v);
    scale_peak.emplace_back(std::stod(r.descriptors[1]), peak);
  }
  std::sort(scale_peak.begin(), scale_peak.end());
  for (std::size_t i = 1; i < scale_peak.size(); ++i)
    CHECK(scale_peak[i].second > scale_peak[i - 1].second);

  CHECK(generate_synthetic(0, 16, 1).series.empty());
  CHECK_THROWS_AS(generate_synthetic(4, 16, 1, "brownian"), std::invalid_argument);
}
