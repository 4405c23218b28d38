#include <doctest.h>

#include <Eigen/Dense>

#include "../support.hpp"
#include "eopr/io.hpp"
#include "eopr/panel.hpp"

using namespace eopr;
using testsupport::write_temp;

TEST_CASE("load_panel wide: 3 units x 4 times") {
  std::string path = write_temp("panel_wide.csv",
                                "unit,t1,t2,t3,t4\n"
                                "A,1,2,3,4\n"
                                "B,5,6,7,8\n"
                                "C,9,10,11,12\n");
  PanelData panel = load_panel(path, Layout::kWide, "A", 2);
  CHECK(panel.n_units() == 3);
  CHECK(panel.n_periods() == 4);
  CHECK(panel.t0 == 2);
  CHECK(panel.treated[0] == 1.0);
  CHECK(panel.treated[3] == 4.0);
  CHECK(panel.controls(0, 0) == 5.0);
  CHECK(panel.controls(1, 3) == 12.0);
  CHECK(panel.unit_labels == std::vector<std::string>{"A", "B", "C"});
  CHECK(panel.time_labels[0] == "t1");
}

TEST_CASE("load_panel long: missing observation raises MissingValue") {
  std::string path = write_temp("panel_missing.csv",
                                "unit,time,value\n"
                                "A,1,1\nA,2,2\n"
                                "B,1,3\n");  // B lacks time 2
  try {
    load_panel(path, Layout::kLong, "A", 1);
    FAIL("expected MissingValue");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_value);
  }
}

TEST_CASE("load_panel: unknown treated label and bad t0") {
  std::string path = write_temp("panel_small.csv",
                                "unit,t1,t2,t3\n"
                                "A,1,2,3\n"
                                "B,4,5,6\n");
  try {
    load_panel(path, Layout::kWide, "Z", 1);
    FAIL("expected UnknownTreated");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_treated);
  }
  for (int bad_t0 : {0, 3, -1}) {
    try {
      load_panel(path, Layout::kWide, "A", bad_t0);
      FAIL("expected BadT0");
    } catch (const Error& e) {
      CHECK(e.code() == errc::bad_t0);
    }
  }
}

TEST_CASE("long and wide encodings of the same panel load identically") {
  Rng rng(11);
  PanelData panel = testsupport::random_panel(rng, 5, 10, 4);
  std::string tmp = std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp";
  std::string wide_path = tmp + "/roundtrip_wide.csv";
  std::string long_path = tmp + "/roundtrip_long.csv";
  write_wide_panel(wide_path, panel);
  write_long_panel(long_path, panel);

  PanelData from_wide = load_panel(wide_path, Layout::kWide, "treated", 4);
  PanelData from_long = load_panel(long_path, Layout::kLong, "treated", 4);
  CHECK(from_wide.controls == from_long.controls);
  CHECK(from_wide.treated == from_long.treated);
  CHECK(from_wide.unit_labels == from_long.unit_labels);
  CHECK(from_wide.time_labels == from_long.time_labels);
  CHECK(from_wide.controls == panel.controls);
  CHECK(from_wide.treated == panel.treated);
}

TEST_CASE("moving_average") {
  Eigen::VectorXd series(3);
  series << 2, 4, 6;

  SUBCASE("window 1 is the identity") {
    CHECK(moving_average(series, 1) == series);
  }
  SUBCASE("trailing means") {
    Eigen::VectorXd expected(3);
    expected << 2, 3, 5;
    CHECK(moving_average(series, 2) == expected);
  }
  SUBCASE("window larger than the series degrades to a running mean") {
    Eigen::VectorXd out = moving_average(series, 10);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == 3.0);
    CHECK(out[2] == 4.0);
  }
  SUBCASE("constants are preserved exactly for any window") {
    Eigen::VectorXd constant = Eigen::VectorXd::Constant(9, 0.1);
    for (int window : {1, 2, 3, 7, 20})
      CHECK(moving_average(constant, window) == constant);
  }
}

TEST_CASE("split partitions at t0 and concatenation is exact") {
  SUBCASE("T=4, t0=2") {
    Rng rng(3);
    PanelData panel = testsupport::random_panel(rng, 4, 4, 2);
    SplitPanel parts = split(panel);
    CHECK(parts.controls_pre.cols() == 2);
    CHECK(parts.controls_post.cols() == 2);
    CHECK(parts.controls_pre.col(0) == panel.controls.col(0));
    CHECK(parts.controls_post.col(1) == panel.controls.col(3));
  }
  SUBCASE("boundary t0 = T-1 leaves one post column") {
    Rng rng(4);
    PanelData panel = testsupport::random_panel(rng, 3, 6, 5);
    SplitPanel parts = split(panel);
    CHECK(parts.controls_post.cols() == 1);
    CHECK(parts.treated_post.size() == 1);
  }
  SUBCASE("concat(split(panel)) reproduces the panel bitwise") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      int t_total = 2 + static_cast<int>(rng.below(12));
      int t0 = 1 + static_cast<int>(rng.below(t_total - 1));
      PanelData panel = testsupport::random_panel(
          rng, 2 + static_cast<int>(rng.below(5)), t_total, t0);
      SplitPanel parts = split(panel);
      Eigen::MatrixXd controls(panel.controls.rows(), t_total);
      controls << parts.controls_pre, parts.controls_post;
      Eigen::VectorXd treated(t_total);
      treated << parts.treated_pre, parts.treated_post;
      CHECK(controls == panel.controls);
      CHECK(treated == panel.treated);
    }
  }
}

TEST_CASE("normalize") {
  SUBCASE("none is the identity with a no-op record") {
    Rng rng(6);
    PanelData panel = testsupport::random_panel(rng, 3, 5, 2);
    auto [out, record] = normalize(panel, NormScheme::kNone);
    CHECK(out.controls == panel.controls);
    CHECK(record.scale == 1.0);
    CHECK(record.shift == 0.0);
  }
  SUBCASE("treated_pre_max divides by the max absolute pre value") {
    PanelData panel;
    panel.controls.resize(1, 3);
    panel.controls << 8, 12, 16;
    panel.treated.resize(3);
    panel.treated << 2, 4, 6;  // pre = {2, 4}
    panel.t0 = 2;
    auto [out, record] = normalize(panel, NormScheme::kTreatedPreMax);
    CHECK(record.scale == 4.0);
    CHECK(out.treated[0] == 0.5);
    CHECK(out.controls(0, 0) == 2.0);
  }
  SUBCASE("round-trip is within 1e-12 relative") {
    Rng rng(7);
    for (auto scheme :
         {NormScheme::kNone, NormScheme::kTreatedPreMax, NormScheme::kZScore}) {
      for (int trial = 0; trial < 10; ++trial) {
        PanelData panel = testsupport::random_panel(
            rng, 3 + static_cast<int>(rng.below(4)), 8, 4, 50.0);
        auto [normalized, record] = normalize(panel, scheme);
        PanelData restored = denormalize(normalized, record);
        double scale = panel.controls.cwiseAbs().maxCoeff();
        CHECK((restored.controls - panel.controls).cwiseAbs().maxCoeff() <=
              1e-12 * scale);
        CHECK((restored.treated - panel.treated).cwiseAbs().maxCoeff() <=
              1e-12 * scale);
        Eigen::VectorXd series =
            denormalize_series(normalized.treated, record);
        CHECK((series - panel.treated).cwiseAbs().maxCoeff() <=
              1e-12 * scale);
      }
    }
  }
  SUBCASE("zero scale raises DegenerateScale") {
    PanelData panel;
    panel.controls = Eigen::MatrixXd::Ones(1, 3);
    panel.treated = Eigen::VectorXd::Zero(3);
    panel.t0 = 2;
    try {
      normalize(panel, NormScheme::kTreatedPreMax);
      FAIL("expected DegenerateScale");
    } catch (const Error& e) {
      CHECK(e.code() == errc::degenerate_scale);
    }
    panel.treated = Eigen::VectorXd::Ones(3);  // constant pooled pre values
    try {
      normalize(panel, NormScheme::kZScore);
      FAIL("expected DegenerateScale");
    } catch (const Error& e) {
      CHECK(e.code() == errc::degenerate_scale);
    }
  }
}

TEST_CASE("align_by_intervention") {
  SUBCASE("each unit is re-indexed around its own intervention day") {
    AlignmentSpec spec;
    spec.treated_label = "a";
    AlignedUnit a, b;
    a.label = "a";
    a.intervention_day = parse_iso_date("2020-03-10");
    b.label = "b";
    b.intervention_day = parse_iso_date("2020-03-17");
    for (int offset = -8; offset < 8; ++offset) {
      a.series[a.intervention_day + offset] = 100.0 + offset;
      b.series[b.intervention_day + offset] = 200.0 + offset;
    }
    spec.units = {a, b};
    PanelData panel = align_by_intervention(spec, AlignmentWindow{5, 5});
    CHECK(panel.n_periods() == 10);
    CHECK(panel.t0 == 5);
    CHECK(panel.time_labels.front() == "-5");
    CHECK(panel.time_labels.back() == "4");
    CHECK(panel.treated[0] == 100.0 - 5);   // unit a, 5 days before day 10
    CHECK(panel.controls(0, 0) == 200.0 - 5);  // unit b anchored at day 17
    CHECK(panel.treated[5] == 100.0);       // offset 0 = intervention day
  }
  SUBCASE("insufficient history names the offending unit") {
    AlignmentSpec spec;
    spec.treated_label = "a";
    AlignedUnit a, b;
    a.label = "a";
    a.intervention_day = 3;
    for (long d = 0; d < 10; ++d) a.series[d] = 1.0;
    b.label = "b";
    b.intervention_day = 13;
    for (long d = 10; d < 20; ++d) b.series[d] = 1.0;  // only 3 pre days
    spec.units = {a, b};
    try {
      align_by_intervention(spec, AlignmentWindow{5, 5});
      FAIL("expected InsufficientHistory");
    } catch (const Error& e) {
      CHECK(e.code() == errc::insufficient_history);
      CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }
  }
  SUBCASE("window (50, 150) yields T=200, t0=50") {
    AlignmentSpec spec;
    spec.treated_label = "u0";
    for (int u = 0; u < 5; ++u) {
      AlignedUnit unit;
      unit.label = "u" + std::to_string(u);
      unit.intervention_day = 18300 + 7 * u;
      for (long d = -60; d < 160; ++d)
        unit.series[unit.intervention_day + d] = static_cast<double>(u + d);
      spec.units.push_back(unit);
    }
    PanelData panel = align_by_intervention(spec, AlignmentWindow{50, 150});
    CHECK(panel.n_periods() == 200);
    CHECK(panel.t0 == 50);
  }
}

TEST_CASE("iso dates round-trip") {
  CHECK(parse_iso_date("1970-01-01") == 0);
  CHECK(parse_iso_date("1970-01-02") == 1);
  CHECK(format_iso_date(parse_iso_date("2020-03-15")) == "2020-03-15");
  CHECK(parse_iso_date("2020-03-16") - parse_iso_date("2020-03-15") == 1);
  CHECK_THROWS_AS(parse_iso_date("2020-13-01"), Error);
  CHECK_THROWS_AS(parse_iso_date("not-a-date"), Error);
}
