#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "lifecast/config.hpp"

using namespace lifecast;
namespace fs = std::filesystem;

TEST_CASE("config text round trip is exact") {
  RunConfig cfg;
  cfg.gamma = 2.25;
  cfg.fusion = "scaled";
  cfg.train_frac = 0.75;
  cfg.bands = "1-4,5-16";
  cfg.seed = 12345678901234567ULL;
  const std::string text = config_to_text(cfg);
  const RunConfig back = parse_config_text(text);
  CHECK(config_to_text(back) == text);
}

TEST_CASE("parser accepts comments, blanks, and loose spacing") {
  const RunConfig cfg = parse_config_text(
      "# leading comment\n"
      "\n"
      "refs_k=3\n"
      "  gamma =  2.5   # inline comment\n"
      "fusion = scaled\n");
  CHECK(cfg.refs_k == 3);
  CHECK(cfg.gamma == doctest::Approx(2.5));
  CHECK(cfg.fusion == "scaled");
  CHECK(cfg.hidden_dim == 16);  // untouched keys keep their defaults
}

TEST_CASE("parser rejects malformed input with line numbers") {
  CHECK_THROWS_WITH_AS(parse_config_text("\n\nwidth = 3\n"),
                       doctest::Contains("line 3"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("width = 3\n"),
                       doctest::Contains("unknown key 'width'"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("gamma\n"),
                       doctest::Contains("expected key = value"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("gamma = fast\n"),
                       doctest::Contains("not a number"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text("refs_k = -2\n"),
                       doctest::Contains("nonnegative"), std::invalid_argument);
}

TEST_CASE("validation rejects out-of-range settings") {
  auto broken = [](auto&& tweak) {
    RunConfig cfg;
    tweak(cfg);
    return cfg;
  };
  CHECK_THROWS_WITH_AS(validate_config(broken([](RunConfig& c) { c.t0 = 3; })),
                       doctest::Contains("pre-launch mode requires t0 = 1"), std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) {
                    c.mode = "post-launch";
                    c.t0 = c.horizon + 1;
                  })),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(validate_config(broken([](RunConfig& c) { c.embed_width = 7; })),
                       doctest::Contains("embed_width"), std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) { c.mode = "mid-launch"; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) { c.fusion = "concat"; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) { c.train_frac = 1.0; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) {
                    c.beta_start = 0.2;
                    c.beta_end = 0.1;
                  })),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) { c.target_kappa = 1.0; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_config(broken([](RunConfig& c) { c.bands = "1-99x"; })),
                  std::invalid_argument);
  CHECK_NOTHROW(validate_config(RunConfig{}));
  CHECK_NOTHROW(validate_config(broken([](RunConfig& c) {
    c.mode = "post-launch";
    c.t0 = 6;
  })));
}

TEST_CASE("band specs map 1-based inclusive ranges to step intervals") {
  const std::vector<HorizonBand> bands = parse_bands("1-8,9-16");
  REQUIRE(bands.size() == 2);
  CHECK(bands[0].begin == 0);
  CHECK(bands[0].end == 8);
  CHECK(bands[0].label == "1-8");
  CHECK(bands[1].begin == 8);
  CHECK(bands[1].end == 16);
  CHECK(bands[1].label == "9-16");

  const std::vector<HorizonBand> single = parse_bands(" 3-3 ");
  REQUIRE(single.size() == 1);
  CHECK(single[0].begin == 2);
  CHECK(single[0].end == 3);

  CHECK_THROWS_AS(parse_bands("0-5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bands("8-2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bands("x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bands("4-"), std::invalid_argument);
  CHECK_THROWS_AS(parse_bands(""), std::invalid_argument);
}

TEST_CASE("config files load from disk") {
  const fs::path dir = fs::temp_directory_path() / "lifecast_unit";
  fs::create_directories(dir);
  const fs::path p = dir / "run.cfg";
  {
    std::ofstream out(p);
    out << "horizon = 12\nbands = 1-6,7-12\n";
  }
  const RunConfig cfg = load_config(p.string());
  CHECK(cfg.horizon == 12);
  CHECK(cfg.bands == "1-6,7-12");
  CHECK_THROWS_AS(load_config((dir / "nope.cfg").string()), std::runtime_error);
}
