#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "motionaug/commands.hpp"

using namespace motionaug;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("motionaug_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

SynthConfig tiny_synth() {
  SynthConfig s;
  s.n_users = 4;
  s.samples_per_user = 3;
  s.length = 10;
  s.n_channels = 2;
  return s;
}

nlohmann::json small_sweep() {
  auto j = reference_sweep_json();
  j["dataset"]["synthetic"] = {{"users", 12}, {"samples_per_user", 120}, {"length", 24}, {"channels", 2}, {"seed", 4}};
  j["augmentation"] = {{"ratios", {1.0, 0.5}}, {"noise", {{"sigma", {0.05, 0.2}}}}, {"temporal", {{"f_t", {0.9}}}},
                       {"intensity", {{"f_i", {1.1}}}}, {"warp", {{"directions", {"lr"}}}}};
  return j;
}

}  // namespace

TEST(Synth, ShapeIdsAndDeterminism) {
  const auto a = generate(tiny_synth());
  ASSERT_EQ(a.samples.size(), 12u);
  EXPECT_EQ(a.users, (std::vector<std::string>{"u000", "u001", "u002", "u003"}));
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.samples[0].signal.n_channels(), 2u);
  EXPECT_EQ(a.samples[0].signal.length(), 10u);
  EXPECT_EQ(generate(tiny_synth()), a);
  auto other = tiny_synth();
  other.seed = 2;
  EXPECT_NE(generate(other), a);
}

TEST(Synth, JitterIsAroundTheSignature) {
  auto cfg = tiny_synth();
  cfg.samples_per_user = 400;
  cfg.length = 50;
  const auto ds = generate(cfg);
  const Signal sig = user_signature(cfg, 1);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : ds.samples) {
    if (s.user_id != "u001") continue;
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 50; ++i) {
        const double d = s.signal(c, i) - sig(c, i);
        sum += d;
        sum_sq += d * d;
        ++n;
      }
  }
  const double mean = sum / static_cast<double>(n);
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(sum_sq / static_cast<double>(n) - mean * mean), 0.1, 0.005);
  cfg.jitter_std = 0.0;
  EXPECT_EQ(generate(cfg).samples[0].signal, user_signature(cfg, 0));
}

TEST(Config, ReferenceSweepParses) {
  const auto sc = parse_sweep_config(reference_sweep_json());
  const auto& s = sc.experiment.sweep;
  EXPECT_EQ(s.sigmas.size(), 8u);
  EXPECT_EQ(s.f_ts.size(), 10u);
  EXPECT_EQ(s.f_is.size(), 10u);
  EXPECT_EQ(s.warps.size(), 2u);
  EXPECT_EQ(s.ratios, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(sc.experiment.combined.size(), 2u);
  EXPECT_EQ(sc.experiment.grid.Cs, (std::vector<double>{1, 10, 100}));
  ASSERT_TRUE(sc.dataset.synthetic.has_value());
  EXPECT_EQ(sc.dataset.synthetic->n_users, 100u);
  EXPECT_DOUBLE_EQ(sc.dataset.synthetic->jitter_std, 0.1 * sc.dataset.synthetic->amplitude);
}

TEST(Config, Errors) {
  auto j = reference_sweep_json();
  j["svm"]["C"] = nlohmann::json::array();
  EXPECT_THROW(parse_sweep_config(j), ConfigError);
  j = reference_sweep_json();
  j["bogus"] = 1;
  EXPECT_THROW(parse_sweep_config(j), ConfigError);
  j = reference_sweep_json();
  j["augmentation"]["ratios"] = {0.25};
  EXPECT_THROW(parse_sweep_config(j), ConfigError);
  j["mode"] = "exploratory";
  EXPECT_NO_THROW(parse_sweep_config(j));
  j = reference_sweep_json();
  j["combined"][0]["name"] = "a,b";
  EXPECT_THROW(parse_sweep_config(j), ConfigError);
  j = reference_sweep_json();
  j["combined"][0]["methods"][0]["method"] = "mixup";
  EXPECT_THROW(parse_sweep_config(j), ConfigError);
  EXPECT_THROW(load_sweep_config("/nonexistent/config.json"), ConfigError);
}

TEST(Report, MarkersAndCellsRoundTrip) {
  TempDir dir;
  write_text(dir / "sweep.json", small_sweep().dump());
  std::ostringstream out, err;
  cli::SweepArgs args{(dir / "sweep.json").string(), (dir / "out").string(), std::nullopt, std::nullopt};
  ASSERT_EQ(cli::guarded(err, [&] { return cli::cmd_sweep(args, out); }), cli::kOk) << err.str();
  for (const char* f : {"table_independent.txt", "table_independent.csv", "table_combined.txt", "table_combined.csv",
                        "cells.csv", "per_user.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;

  std::ifstream t1(dir / "out" / "table_independent.csv");
  const auto table = read_table_csv(t1);
  EXPECT_TRUE(check_markers(table).empty());
  ASSERT_EQ(table.rows.size(), 1u + 4u * 2u);
  EXPECT_TRUE(table.rows[0].baseline);
  EXPECT_EQ(table.rows[1].method, "Random noise");
  EXPECT_EQ(table.rows[4].method, "Warping");
  EXPECT_EQ(table.rows[5].section, "Augmentation of all samples with ratio 0.5x");

  std::ifstream t2(dir / "out" / "table_combined.csv");
  const auto combined = read_table_csv(t2);
  ASSERT_EQ(combined.rows.size(), 3u);
  EXPECT_EQ(combined.rows[1].method, "All augmentation methods");
  EXPECT_EQ(combined.rows[2].method, "Random noise+temporal scaling");

  // Regenerating from the cells dump reproduces the table files.
  std::ostringstream out2;
  ASSERT_EQ(cli::cmd_report((dir / "out" / "cells.csv").string(), (dir / "regen").string(), std::nullopt, out2, err),
            cli::kOk);
  EXPECT_EQ(slurp(dir / "regen" / "table_independent.csv"), slurp(dir / "out" / "table_independent.csv"));
  EXPECT_EQ(slurp(dir / "regen" / "table_combined.txt"), slurp(dir / "out" / "table_combined.txt"));
}

TEST(Report, CheckDetectsTamperedMarker) {
  ReportTable t;
  ReportRow base;
  base.section = "No augmentation";
  base.baseline = true;
  base.accuracy = 0.9;
  ReportRow up = base;
  up.section = "Augmentation of all samples with ratio 1x";
  up.baseline = false;
  up.method = "Random noise";
  up.accuracy = 0.92;
  up.exceeds_baseline = true;
  t.rows = {base, up};
  EXPECT_TRUE(check_markers(t).empty());
  t.rows[1].exceeds_baseline = false;
  EXPECT_EQ(check_markers(t).size(), 1u);
  t.rows[1].exceeds_baseline = true;
  t.rows[1].accuracy = 0.9;  // equal is not "exceeds"
  EXPECT_EQ(check_markers(t).size(), 1u);

  TempDir dir;
  std::ostringstream csv;
  write_table_csv(csv, t);
  write_text(dir / "t.csv", csv.str());
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_report(std::nullopt, std::nullopt, (dir / "t.csv").string(), out, err), cli::kDataError);
  EXPECT_NE(err.str().find("inconsistent"), std::string::npos);
}

TEST(Commands, SynthThenValidate) {
  TempDir dir;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_synth(tiny_synth(), (dir / "d.csv").string(), out), cli::kOk);
  out.str("");
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_validate((dir / "d.csv").string(), out); }), cli::kOk);
  EXPECT_NE(out.str().find("12 samples, 4 users, 2 channels, length 10"), std::string::npos) << out.str();
}

TEST(Commands, ValidateReportsDataErrors) {
  TempDir dir;
  write_text(dir / "dup.csv", "user_id,event_index,channel,v1,v2\nu,0,0,1,2\nu,0,0,1,2\n");
  std::ostringstream out, err;
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_validate((dir / "dup.csv").string(), out); }), cli::kDataError);
  EXPECT_NE(err.str().find("line 3"), std::string::npos) << err.str();
  write_text(dir / "emb.csv", "user_id,event_index,e1,e2\na,0,1,2\na,1,3\n");
  err.str("");
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_validate((dir / "emb.csv").string(), out); }), cli::kDataError);
  EXPECT_NE(err.str().find("row 1"), std::string::npos) << err.str();
  write_text(dir / "junk.csv", "a,b,c\n");
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_validate((dir / "junk.csv").string(), out); }), cli::kDataError);
}

TEST(Commands, AugmentIsDeterministicAndWritesPlotData) {
  TempDir dir;
  std::ostringstream out;
  cli::cmd_synth(tiny_synth(), (dir / "d.csv").string(), out);
  cli::AugmentArgs a;
  a.input = (dir / "d.csv").string();
  a.output = (dir / "a1.csv").string();
  a.spec = AugmentationSpec::noise(0.1);
  a.seed = 17;
  a.plot_data = (dir / "plot.csv").string();
  ASSERT_EQ(cli::cmd_augment(a, out), cli::kOk);
  a.output = (dir / "a2.csv").string();
  a.plot_data.reset();
  ASSERT_EQ(cli::cmd_augment(a, out), cli::kOk);
  EXPECT_EQ(slurp(dir / "a1.csv"), slurp(dir / "a2.csv"));

  const auto original = load_dataset((dir / "d.csv").string());
  const auto augmented = load_dataset((dir / "a1.csv").string());
  ASSERT_EQ(augmented.samples.size(), original.samples.size());
  EXPECT_NE(augmented.samples[0].signal, original.samples[0].signal);
  EXPECT_EQ(augmented.samples[0].key(), original.samples[0].key());

  std::ifstream plot(dir / "plot.csv");
  std::string line;
  std::getline(plot, line);
  EXPECT_EQ(line, "user_id,event_index,channel,t,original,augmented");
  std::size_t rows = 0;
  while (std::getline(plot, line)) ++rows;
  EXPECT_EQ(rows, 12u * 2u * 10u);
}

TEST(Commands, AugmentRejectsBadParameters) {
  TempDir dir;
  std::ostringstream out, err;
  cli::cmd_synth(tiny_synth(), (dir / "d.csv").string(), out);
  cli::AugmentArgs a;
  a.input = (dir / "d.csv").string();
  a.output = (dir / "a.csv").string();
  a.spec = AugmentationSpec::temporal(0.0);
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_augment(a, out); }), cli::kUsageError);
  a.input = (dir / "missing.csv").string();
  a.spec = AugmentationSpec::intensity(1.1);
  EXPECT_NE(cli::guarded(err, [&] { return cli::cmd_augment(a, out); }), cli::kOk);
}

TEST(Commands, SweepWithTableProviderAndAugmentationFails) {
  TempDir dir;
  std::ostringstream out, err;
  write_text(dir / "emb.csv", "user_id,event_index,e1\nu000,0,1\n");
  auto j = small_sweep();
  j["provider"] = "table:emb.csv";
  write_text(dir / "sweep.json", j.dump());
  cli::SweepArgs args{(dir / "sweep.json").string(), (dir / "out").string(), std::nullopt, std::nullopt};
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_sweep(args, out); }), cli::kUsageError);
  EXPECT_NE(err.str().find("statistical provider"), std::string::npos) << err.str();
}
