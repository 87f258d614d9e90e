#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mbounds/analysis.hpp"
#include "mbounds/closed_form.hpp"
#include "mbounds/errors.hpp"
#include "mbounds/lp.hpp"
#include "mbounds/oracle.hpp"

namespace mbounds {
namespace {

const std::string kData = std::string(MBOUNDS_TEST_DATA_DIR);

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

RunConfig base_config() {
  RunConfig c;
  c.treatment = "a";
  c.outcome = "y";
  c.mediators = {"m"};
  c.inference.draws = 500;
  return c;
}

TEST(Dichotomize, NonePassesBinaryThrough) {
  EXPECT_EQ(dichotomize({0, 1, 1, 0}, DichotomizeRule{}), (std::vector<int>{0, 1, 1, 0}));
  EXPECT_THROW(dichotomize({0, 2}, DichotomizeRule{}, "m"), DataError);
}

TEST(Dichotomize, MedianStrictlyGreater) {
  const auto rule = DichotomizeRule::parse("median-gt");
  EXPECT_EQ(dichotomize({1, 2, 3, 4, 5}, rule), (std::vector<int>{0, 0, 0, 1, 1}));
  // Heavy ties at the median all map to 0.
  EXPECT_EQ(dichotomize({2, 2, 2, 3}, rule), (std::vector<int>{0, 0, 0, 1}));
}

TEST(Dichotomize, Threshold) {
  const auto rule = DichotomizeRule::parse("threshold:2.5");
  EXPECT_EQ(dichotomize({1, 2, 3}, rule), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(rule.to_string(), "threshold:2.5");
}

TEST(Dichotomize, LowerMedianForEvenCounts) {
  EXPECT_EQ(lower_median({4, 1, 3, 2}), 2.0);
  EXPECT_EQ(lower_median({5}), 5.0);
  EXPECT_EQ(dichotomize({1, 2, 3, 4}, DichotomizeRule::parse("median-gt")), (std::vector<int>{0, 0, 1, 1}));
}

TEST(Dichotomize, ParseErrors) {
  EXPECT_THROW(DichotomizeRule::parse("mean"), ConfigError);
  EXPECT_THROW(DichotomizeRule::parse("threshold:"), ConfigError);
  EXPECT_THROW(DichotomizeRule::parse("threshold:abc"), ConfigError);
}

TEST(Ingest, MissingColumnIsConfigError) {
  std::istringstream in("a,y\n1,0\n0,1\n");
  EXPECT_THROW(ingest(in, base_config()), ConfigError);
}

TEST(Ingest, NonNumericCellReportsLine) {
  std::istringstream in("a,y,m\n1,0,1\n0,x,1\n");
  try {
    ingest(in, base_config());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Ingest, AllRowsDroppedIsDataError) {
  std::istringstream in("a,y,m\n1,NA,1\n0,1,\n");
  EXPECT_THROW(ingest(in, base_config()), DataError);
}

TEST(Ingest, DropsRowsWithMissingValues) {
  std::istringstream in("a,y,m,z\n1,0,1,9\n0,NA,1,9\n1,1,.,9\n0,0,0,\n\"1\",1,1,9\n");
  const auto md = ingest(in, base_config());
  ASSERT_EQ(md.size(), 1u);
  EXPECT_EQ(md[0].records.size(), 3u);
  EXPECT_EQ(md[0].dropped_rows, 2u);
  EXPECT_EQ(md[0].records[2].a, 1);
  EXPECT_EQ(md[0].records[2].y, 1);
}

// The mediator median uses every non-missing mediator value, including rows
// later dropped for a missing outcome.
TEST(Ingest, MedianBeforeRowFiltering) {
  auto c = base_config();
  c.default_rule = DichotomizeRule::parse("median-gt");
  c.column_rules["y"] = DichotomizeRule{};
  // m values 1..5; median 3. Rows with m = 4, 5 have missing y.
  std::istringstream in("a,y,m\n1,1,1\n0,0,2\n1,1,3\nNA,0,4\n0,NA,5\n");
  const auto md = ingest(in, c);
  ASSERT_EQ(md[0].records.size(), 3u);
  for (const auto& r : md[0].records) EXPECT_EQ(r.m, 0);
  // Filtering first would give median 2 and code m = 3 as 1.
}

TEST(Ingest, TreatmentIgnoresGlobalRule) {
  auto c = base_config();
  c.default_rule = DichotomizeRule::parse("median-gt");
  std::istringstream in("a,y,m\n1,5,1\n0,6,2\n1,7,3\n0,8,4\n");
  const auto md = ingest(in, c);
  EXPECT_EQ(md[0].records[0].a, 1);
  EXPECT_EQ(md[0].records[1].a, 0);
  EXPECT_EQ(md[0].records[3].y, 1);
}

TEST(Ingest, PerMediatorDroppedCounts) {
  RunConfig c;
  c.treatment = "treat";
  c.outcome = "outcome";
  c.mediators = {"anxiety", "contact"};
  c.default_rule = DichotomizeRule::parse("median-gt");
  c.column_rules["contact"] = DichotomizeRule{};
  const auto md = ingest(kData + "/synthetic.csv", c);
  ASSERT_EQ(md.size(), 2u);
  EXPECT_EQ(md[0].records.size() + md[0].dropped_rows, 600u);
  EXPECT_EQ(md[1].records.size() + md[1].dropped_rows, 600u);
  EXPECT_NE(md[0].dropped_rows, md[1].dropped_rows);
}

TEST(RunConfig, Validation) {
  auto c = base_config();
  EXPECT_THROW(c.validate(), ConfigError);  // no input
  c.data_path = "x.csv";
  EXPECT_NO_THROW(c.validate());
  c.mediators.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = base_config();
  c.data_path = "x.csv";
  c.inference.alpha = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

AnalysisReport synthetic_report(std::vector<Assumptions> as) {
  Rng rng(151);
  const auto pop = random_population(rng, PopulationSupport::mmr_strata);
  MediatorData a{"alpha", sample_records(pop, 800, 1), 0};
  MediatorData b{"beta", sample_records(pop, 600, 2), 0};
  RunConfig c = base_config();
  c.data_path = "unused.csv";
  c.assumptions = std::move(as);
  c.inference.draws = 1000;
  return run({a, b}, c);
}

TEST(Run, MatchesDirectModuleCalls) {
  Rng rng(151);
  const auto pop = random_population(rng, PopulationSupport::mmr_strata);
  const auto records = sample_records(pop, 800, 1);
  const auto report = synthetic_report({Assumptions::none, Assumptions::mmr, Assumptions::mmr_pos_mediator});
  const auto& m = report.mediators.front();
  InferenceConfig ic = report.config.inference;
  const auto counts = tabulate(records);
  EXPECT_EQ(m.counts, counts);
  EXPECT_EQ(m.distribution, from_units(records));
  EXPECT_EQ(m.ate.estimate, ate_test(counts, ic).estimate);
  EXPECT_EQ(m.iot.ci_upper, iot_test(counts, ic).ci_upper);
  for (const auto& a : m.analyses) {
    const auto direct = clr_bounds(counts, a.spec, ic);
    EXPECT_EQ(a.inference->bound_lower_hmu, direct.bound_lower_hmu);
    EXPECT_EQ(a.inference->ci_upper, direct.ci_upper);
    EXPECT_EQ(a.closed_form->lower, closed_form_bounds(m.distribution, a.spec).lower);
    EXPECT_EQ(a.lp->upper, anie_bounds_lp(m.distribution, a.spec).upper);
  }
}

TEST(PlotData, RowCountAndReferenceLine) {
  const auto report = synthetic_report({Assumptions::none, Assumptions::mmr});
  const auto rows = plot_rows(report);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].method, "iot");
  EXPECT_EQ(rows[1].method, "iot");
  for (const auto& r : rows) {
    const auto& med = r.mediator == "alpha" ? report.mediators[0] : report.mediators[1];
    EXPECT_EQ(r.ate_reference_line, med.ate.estimate);
    if (r.method == "bounds-none") {
      EXPECT_LE(*r.lo, 0.0);
      EXPECT_GE(*r.hi, 0.0);
      EXPECT_FALSE(r.point);
    }
  }
  const auto text = lines_of(emit_plotdata(report));
  ASSERT_EQ(text.size(), 7u);
  EXPECT_EQ(text[0], "mediator,method,point,lo,hi,ci_lo,ci_hi,ate_reference_line");
  for (std::size_t i = 1; i < text.size(); ++i) EXPECT_EQ(fields_of(text[i]).size(), 8u) << text[i];
}

TEST(Emit, JsonSchemaAndNulls) {
  const auto report = synthetic_report({Assumptions::mmr});
  const auto doc = nlohmann::json::parse(emit_json(report));
  EXPECT_EQ(doc.at("schema"), "mediation-bounds/1");
  EXPECT_EQ(doc.at("mediators").size(), 2u);
  EXPECT_EQ(doc["mediators"][0]["name"], "alpha");
  EXPECT_TRUE(doc["mediators"][0]["analyses"][0].contains("inference"));
}

TEST(Emit, CsvOneRowPerMediatorAndAssumption) {
  const auto report = synthetic_report({Assumptions::none, Assumptions::mmr, Assumptions::mmr_pos_mediator});
  const auto text = lines_of(emit_csv(report));
  ASSERT_EQ(text.size(), 7u);
  const auto header = fields_of(text[0]);
  for (std::size_t i = 1; i < text.size(); ++i) EXPECT_EQ(fields_of(text[i]).size(), header.size());
}

TEST(Emit, DeterministicBytes) {
  const auto a = synthetic_report({Assumptions::none, Assumptions::mmr});
  const auto b = synthetic_report({Assumptions::none, Assumptions::mmr});
  EXPECT_EQ(emit_json(a), emit_json(b));
  EXPECT_EQ(emit_plotdata(a), emit_plotdata(b));
  EXPECT_EQ(emit_csv(a), emit_csv(b));
}

TEST(Run, CountsInputIsOneMediator) {
  RunConfig c;
  CellCounts cc;
  cc.n = {40, 30, 20, 10, 10, 20, 30, 40};
  c.counts = cc;
  c.assumptions = {Assumptions::none, Assumptions::mmr};
  c.inference.draws = 500;
  const auto report = run(c);
  ASSERT_EQ(report.mediators.size(), 1u);
  EXPECT_EQ(report.mediators[0].name, "mediator");
  EXPECT_EQ(report.mediators[0].counts, cc);
  EXPECT_NEAR(report.mediators[0].analyses[0].closed_form->lower, -0.3, 1e-12);
  EXPECT_NEAR(report.mediators[0].analyses[1].closed_form->upper, 0.2, 1e-12);
}

TEST(Run, IncompatibilityIsFlagged) {
  RunConfig c;
  CellCounts cc;
  cc.n = {20, 30, 10, 40, 40, 10, 40, 10};
  c.counts = cc;
  c.assumptions = {Assumptions::none, Assumptions::mmr};
  c.inference.draws = 500;
  const auto report = run(c);
  EXPECT_FALSE(report.mediators[0].analyses[0].incompatible);
  EXPECT_TRUE(report.mediators[0].analyses[1].incompatible);
  EXPECT_FALSE(report.mediators[0].analyses[1].lp);
  EXPECT_TRUE(report.any_incompatible());
}

TEST(Golden, SyntheticPlotData) {
  RunConfig c;
  c.data_path = kData + "/synthetic.csv";
  c.treatment = "treat";
  c.outcome = "outcome";
  c.mediators = {"anxiety", "contact"};
  c.default_rule = DichotomizeRule::parse("median-gt");
  c.column_rules["contact"] = DichotomizeRule{};
  c.assumptions = {Assumptions::none, Assumptions::mmr, Assumptions::mmr_pos_mediator};
  c.inference.draws = 2000;
  c.inference.seed = 7;
  std::ifstream in(kData + "/synthetic_plotdata.csv", std::ios::binary);
  ASSERT_TRUE(in);
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(emit_plotdata(run(c)), golden.str());
}

}  // namespace
}  // namespace mbounds
