#include "mbounds/analysis.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mbounds/closed_form.hpp"
#include "mbounds/lp.hpp"

namespace mbounds {
namespace {

using json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// RFC 4180-style split of one line; doubled quotes inside a quoted field escape.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
         cell == ".";
}

std::optional<double> parse_cell(const std::string& cell, const std::string& column, std::size_t line) {
  if (is_missing(cell)) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v)) {
    throw DataError(fmt::format("line {}: column '{}' has non-numeric value '{}'", line, column, cell));
  }
  return v;
}

std::string assumption_method_name(Assumptions a) {
  switch (a) {
    case Assumptions::none: return "bounds-none";
    case Assumptions::mmr: return "bounds-mmr";
    case Assumptions::mmr_pos_mediator: return "bounds-mmr-pos";
  }
  return "bounds";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const WaldEstimate& w) {
  return json{{"estimate", w.estimate},
              {"standard_error", w.standard_error},
              {"ci", json::array({w.ci_lower, w.ci_upper})},
              {"level", w.level}};
}

json to_json(const BoundsResult& b) {
  return json{{"lower", number_or_null(b.lower)},
              {"upper", number_or_null(b.upper)},
              {"binding_lower", b.binding_lower},
              {"binding_upper", b.binding_upper},
              {"method", std::string(to_string(b.method))},
              {"assumption_incompatible", b.assumption_incompatible},
              {"diagnostics", b.diagnostics}};
}

json to_json(const SideDiagnostics& d) {
  return json{{"inference", d.inference},
              {"selected", d.selected},
              {"k_selection", d.k_selection},
              {"k_half", d.k_half},
              {"k_ci", d.k_ci}};
}

json to_json(const IntervalEstimate& e) {
  json exprs = json::array();
  for (const auto& x : e.expression_estimates) {
    exprs.push_back(json{{"side", x.upper_side ? "upper" : "lower"},
                         {"expression", x.label},
                         {"estimate", x.estimate},
                         {"standard_error", x.standard_error},
                         {"selected", x.selected},
                         {"degenerate", x.degenerate}});
  }
  return json{{"level", e.level},
              {"plugin", json::array({number_or_null(e.plugin_lower), number_or_null(e.plugin_upper)})},
              {"hmu", json::array({number_or_null(e.bound_lower_hmu), number_or_null(e.bound_upper_hmu)})},
              {"ci", json::array({number_or_null(e.ci_lower), number_or_null(e.ci_upper)})},
              {"crossed", e.crossed},
              {"assumption_incompatible", e.assumption_incompatible},
              {"degenerate_covariance", e.degenerate_covariance},
              {"lower_side", to_json(e.lower)},
              {"upper_side", to_json(e.upper)},
              {"expressions", exprs},
              {"diagnostics", e.diagnostics}};
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return {};
  return fmt::format("{:.6f}", *v);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

DichotomizeRule DichotomizeRule::parse(const std::string& text) {
  const std::string t = trim(text);
  if (t == "none") return {Kind::none, 0.0};
  if (t == "median-gt") return {Kind::median_gt, 0.0};
  const std::string prefix = "threshold:";
  if (t.rfind(prefix, 0) == 0) {
    const std::string num = t.substr(prefix.size());
    char* end = nullptr;
    const double x = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size() || !std::isfinite(x)) {
      throw ConfigError("invalid threshold in dichotomization rule '" + t + "'");
    }
    return {Kind::threshold, x};
  }
  throw ConfigError("unknown dichotomization rule '" + t + "' (expected none, median-gt or threshold:x)");
}

std::string DichotomizeRule::to_string() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::median_gt: return "median-gt";
    case Kind::threshold: return fmt::format("threshold:{:g}", threshold);
  }
  return "none";
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty column");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

std::vector<int> dichotomize(const std::vector<double>& values, const DichotomizeRule& rule,
                             const std::string& column) {
  std::vector<int> out;
  out.reserve(values.size());
  switch (rule.kind) {
    case DichotomizeRule::Kind::none:
      for (double v : values) {
        if (v != 0.0 && v != 1.0) {
          throw DataError(fmt::format("column '{}' has non-binary value {:g} under rule none", column, v));
        }
        out.push_back(static_cast<int>(v));
      }
      break;
    case DichotomizeRule::Kind::median_gt: {
      if (values.empty()) break;
      const double med = lower_median(values);
      for (double v : values) out.push_back(v > med ? 1 : 0);
      break;
    }
    case DichotomizeRule::Kind::threshold:
      for (double v : values) out.push_back(v > rule.threshold ? 1 : 0);
      break;
  }
  return out;
}

void RunConfig::validate() const {
  if (counts && !data_path.empty()) throw ConfigError("give either a data file or counts, not both");
  if (!counts && data_path.empty()) throw ConfigError("no input: give a data file or counts");
  if (!counts) {
    if (treatment.empty()) throw ConfigError("treatment column name is required");
    if (outcome.empty()) throw ConfigError("outcome column name is required");
    if (mediators.empty()) throw ConfigError("at least one mediator column is required");
  }
  if (assumptions.empty()) throw ConfigError("at least one assumption set is required");
  if (reference != 0 && reference != 1) throw ConfigError("reference must be 0 or 1");
  if (mediator_effect_sign != 1 && mediator_effect_sign != -1) {
    throw ConfigError("mediator effect sign must be +1 or -1");
  }
  try {
    inference.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

DichotomizeRule RunConfig::rule_for(const std::string& column, bool is_treatment) const {
  if (auto it = column_rules.find(column); it != column_rules.end()) return it->second;
  return is_treatment ? DichotomizeRule{} : default_rule;
}

std::vector<MediatorData> ingest(std::istream& in, const RunConfig& config) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("input is empty");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_csv_line(line);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::string> names{config.treatment, config.outcome};
  names.insert(names.end(), config.mediators.begin(), config.mediators.end());
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column_of(n));

  // Raw numeric values per required column; missing cells stay empty.
  std::vector<std::vector<std::optional<double>>> raw(names.size());
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(fmt::format("line {}: expected {} fields, found {}", line_no, header.size(),
                                  fields.size()));
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
      raw[c].push_back(parse_cell(fields[idx[c]], names[c], line_no));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("input has a header but no data rows");

  // Dichotomize each column over its own non-missing values.
  std::vector<std::vector<std::optional<int>>> binary(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<double> present;
    for (const auto& v : raw[c])
      if (v) present.push_back(*v);
    const std::vector<int> coded = dichotomize(present, config.rule_for(names[c], c == 0), names[c]);
    std::size_t k = 0;
    binary[c].reserve(rows);
    for (const auto& v : raw[c]) binary[c].push_back(v ? std::optional<int>(coded[k++]) : std::nullopt);
  }

  std::vector<MediatorData> out;
  for (std::size_t j = 0; j < config.mediators.size(); ++j) {
    MediatorData md;
    md.name = config.mediators[j];
    const auto& t = binary[0];
    const auto& y = binary[1];
    const auto& m = binary[2 + j];
    for (std::size_t r = 0; r < rows; ++r) {
      if (t[r] && y[r] && m[r]) {
        md.records.push_back({*t[r], *m[r], *y[r]});
      } else {
        ++md.dropped_rows;
      }
    }
    if (md.records.empty()) {
      throw DataError("mediator '" + md.name + "': every row has a missing required value");
    }
    out.push_back(std::move(md));
  }
  return out;
}

std::vector<MediatorData> ingest(const std::string& path, const RunConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return ingest(in, config);
}

bool AnalysisReport::any_incompatible() const noexcept {
  for (const auto& m : mediators)
    for (const auto& a : m.analyses)
      if (a.incompatible) return true;
  return false;
}

MediatorReport analyze_mediator(const MediatorData& data, const RunConfig& config) {
  const CellCounts counts = tabulate(data.records);
  MediatorReport rep{data.name,
                     counts,
                     data.dropped_rows,
                     from_counts(counts),
                     ate_test(counts, config.inference),
                     iot_test(counts, config.inference),
                     {}};

  for (Assumptions a : config.assumptions) {
    AssumptionAnalysis an;
    an.spec = EstimandSpec{config.reference, a, config.mediator_effect_sign};

    if (has_closed_form(an.spec)) {
      an.closed_form = closed_form_bounds(rep.distribution, an.spec);
      an.incompatible |= an.closed_form->assumption_incompatible;
    } else {
      an.notes.push_back("no closed form for this estimand; bounds come from the LP");
    }
    try {
      an.lp = anie_bounds_lp(rep.distribution, an.spec);
    } catch (const AssumptionIncompatible& e) {
      an.incompatible = true;
      an.notes.push_back(e.what());
    }
    an.inference = clr_bounds(counts, an.spec, config.inference);
    an.incompatible |= an.inference->assumption_incompatible;
    rep.analyses.push_back(std::move(an));
  }
  return rep;
}

AnalysisReport run(const std::vector<MediatorData>& data, const RunConfig& config) {
  config.validate();
  // Mediators run concurrently; results are collected in config order.
  std::vector<std::future<MediatorReport>> jobs;
  jobs.reserve(data.size());
  for (const auto& md : data) {
    jobs.push_back(std::async(std::launch::async, [&md, &config] { return analyze_mediator(md, config); }));
  }
  AnalysisReport report{config, {}};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      report.mediators.push_back(jobs[i].get());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw DataError("mediator '" + data[i].name + "': " + e.what());
    }
  }
  return report;
}

AnalysisReport run(const RunConfig& config) {
  config.validate();
  if (config.counts) {
    MediatorData md;
    md.name = config.mediators.empty() ? "mediator" : config.mediators.front();
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y)
        for (int m = 0; m < 2; ++m)
          md.records.insert(md.records.end(), (*config.counts)(y, m, a), UnitRecord{a, m, y});
    return run(std::vector<MediatorData>{std::move(md)}, config);
  }
  return run(ingest(config.data_path, config), config);
}

std::vector<PlotRow> plot_rows(const AnalysisReport& report) {
  std::vector<PlotRow> rows;
  for (const auto& m : report.mediators) {
    PlotRow r;
    r.mediator = m.name;
    r.method = "iot";
    r.point = m.iot.estimate;
    r.ci_lo = m.iot.ci_lower;
    r.ci_hi = m.iot.ci_upper;
    r.ate_reference_line = m.ate.estimate;
    rows.push_back(r);
  }
  for (const auto& m : report.mediators) {
    for (const auto& a : m.analyses) {
      PlotRow r;
      r.mediator = m.name;
      r.method = assumption_method_name(a.spec.assumptions);
      r.ate_reference_line = m.ate.estimate;
      if (a.inference) {
        r.lo = a.inference->bound_lower_hmu;
        r.hi = a.inference->bound_upper_hmu;
        if (a.inference->lower.inference) r.ci_lo = a.inference->ci_lower;
        if (a.inference->upper.inference) r.ci_hi = a.inference->ci_upper;
      }
      rows.push_back(r);
    }
  }
  return rows;
}

std::string emit_json(const AnalysisReport& report) {
  const RunConfig& c = report.config;
  json assumptions = json::array();
  for (Assumptions a : c.assumptions) assumptions.push_back(std::string(to_string(a)));

  json doc;
  doc["schema"] = "mediation-bounds/1";
  doc["config"] = json{{"reference", c.reference},
                       {"assumptions", assumptions},
                       {"mediator_effect_sign", c.mediator_effect_sign},
                       {"alpha", c.inference.alpha},
                       {"draws", c.inference.draws},
                       {"seed", c.inference.seed},
                       {"selection_slack", c.inference.selection_slack}};
  json meds = json::array();
  for (const auto& m : report.mediators) {
    json cells;
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y)
        for (int mm = 0; mm < 2; ++mm)
          cells[fmt::format("p{}{}.{}", y, mm, a)] = m.distribution.p(y, mm, a);
    json analyses = json::array();
    for (const auto& a : m.analyses) {
      analyses.push_back(json{{"assumptions", std::string(to_string(a.spec.assumptions))},
                              {"reference", a.spec.reference},
                              {"incompatible", a.incompatible},
                              {"closed_form", a.closed_form ? to_json(*a.closed_form) : json(nullptr)},
                              {"lp", a.lp ? to_json(*a.lp) : json(nullptr)},
                              {"inference", a.inference ? to_json(*a.inference) : json(nullptr)},
                              {"notes", a.notes}});
    }
    meds.push_back(json{{"name", m.name},
                        {"n_treated", m.counts.arm_total(1)},
                        {"n_control", m.counts.arm_total(0)},
                        {"dropped_rows", m.dropped_rows},
                        {"cells", cells},
                        {"ate", to_json(m.ate)},
                        {"iot", to_json(m.iot)},
                        {"analyses", analyses}});
  }
  doc["mediators"] = meds;
  return doc.dump(2) + "\n";
}

std::string emit_csv(const AnalysisReport& report) {
  std::string out =
      "mediator,assumptions,reference,n_treated,n_control,dropped_rows,ate,ate_ci_lo,ate_ci_hi,"
      "atm,atm_ci_lo,atm_ci_hi,cf_lower,cf_upper,lp_lower,lp_upper,hmu_lower,hmu_upper,ci_lower,"
      "ci_upper,incompatible\n";
  for (const auto& m : report.mediators) {
    for (const auto& a : m.analyses) {
      auto opt = [](const std::optional<BoundsResult>& b, bool upper) -> std::optional<double> {
        if (!b) return std::nullopt;
        return upper ? b->upper : b->lower;
      };
      std::optional<double> hl, hu, cl, cu;
      if (a.inference) {
        hl = a.inference->bound_lower_hmu;
        hu = a.inference->bound_upper_hmu;
        if (a.inference->lower.inference) cl = a.inference->ci_lower;
        if (a.inference->upper.inference) cu = a.inference->ci_upper;
      }
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                         csv_quote(m.name), to_string(a.spec.assumptions), a.spec.reference,
                         m.counts.arm_total(1), m.counts.arm_total(0), m.dropped_rows,
                         fmt_opt(m.ate.estimate), fmt_opt(m.ate.ci_lower), fmt_opt(m.ate.ci_upper),
                         fmt_opt(m.iot.estimate), fmt_opt(m.iot.ci_lower), fmt_opt(m.iot.ci_upper),
                         fmt_opt(opt(a.closed_form, false)), fmt_opt(opt(a.closed_form, true)),
                         fmt_opt(opt(a.lp, false)), fmt_opt(opt(a.lp, true)), fmt_opt(hl),
                         fmt_opt(hu), fmt_opt(cl), fmt_opt(cu), a.incompatible ? 1 : 0);
    }
  }
  return out;
}

std::string emit_plotdata(const AnalysisReport& report) {
  std::string out = "mediator,method,point,lo,hi,ci_lo,ci_hi,ate_reference_line\n";
  for (const auto& r : plot_rows(report)) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_quote(r.mediator), r.method, fmt_opt(r.point),
                       fmt_opt(r.lo), fmt_opt(r.hi), fmt_opt(r.ci_lo), fmt_opt(r.ci_hi),
                       fmt_opt(r.ate_reference_line));
  }
  return out;
}

std::string emit(const AnalysisReport& report, OutputFormat format) {
  switch (format) {
    case OutputFormat::json: return emit_json(report);
    case OutputFormat::csv: return emit_csv(report);
    case OutputFormat::plotdata: return emit_plotdata(report);
  }
  return emit_json(report);
}

}  // namespace mbounds
