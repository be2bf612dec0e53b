#pragma once

#include <cstdio>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "motionaug/dataset.hpp"
#include "motionaug/error.hpp"
#include "motionaug/protocol.hpp"

namespace motionaug {

struct ReportRow {
  std::string section;
  std::string method;
  std::string value;
  double ratio = 0.0;
  Kernel kernel = Kernel::Linear;
  double C = 1.0;
  double accuracy = 0.0;
  double far = 0.0;
  double frr = 0.0;
  bool baseline = false;
  /// accuracy > baseline accuracy.
  bool exceeds_baseline = false;
};

/// Best cell per row group, laid out like the published result tables.
struct ReportTable {
  std::string title;
  std::vector<ReportRow> rows;
};

namespace detail {

inline std::string ratio_label(double r) { return format_param(r) + "x"; }

inline ReportRow row_from(const CellReport& c, std::string section, std::string method, const CellReport& base) {
  ReportRow r;
  r.section = std::move(section);
  r.method = std::move(method);
  r.value = c.key.family == Family::Combined ? c.description : c.key.value;
  r.ratio = c.key.ratio;
  r.kernel = c.key.kernel;
  r.C = c.key.C;
  r.accuracy = c.mean_accuracy;
  r.far = c.mean_far;
  r.frr = c.mean_frr;
  r.baseline = c.key.family == Family::None;
  r.exceeds_baseline = !r.baseline && c.mean_accuracy > base.mean_accuracy;
  return r;
}

inline std::vector<double> ratios_in(const EvalReport& rep, bool combined) {
  std::vector<double> out;
  for (const auto& c : rep.cells) {
    if (c.key.family == Family::None || (c.key.family == Family::Combined) != combined) continue;
    if (std::find(out.begin(), out.end(), c.key.ratio) == out.end()) out.push_back(c.key.ratio);
  }
  return out;
}

inline ReportTable build_table(const EvalReport& rep, bool combined, std::string title) {
  const CellReport* base = rep.best_baseline();
  if (!base) throw InvalidArgument("report has no baseline cells");
  ReportTable t;
  t.title = std::move(title);
  t.rows.push_back(row_from(*base, "No augmentation", "No augmentation", *base));
  for (double ratio : ratios_in(rep, combined)) {
    const std::string section = "Augmentation of all samples with ratio " + ratio_label(ratio);
    if (combined) {
      for (const auto& c : rep.cells)
        if (c.key.family == Family::Combined && c.key.ratio == ratio && c.best)
          t.rows.push_back(row_from(c, section, c.key.value, *base));
    } else {
      for (Family f : {Family::Noise, Family::Temporal, Family::Intensity, Family::Warp})
        for (const auto& c : rep.cells)
          if (c.key.family == f && c.key.ratio == ratio && c.best)
            t.rows.push_back(row_from(c, section, std::string(family_label(f)), *base));
    }
  }
  return t;
}

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace detail

/// Independent augmentations: baseline, then one best row per method per ratio.
inline ReportTable table_independent(const EvalReport& rep) {
  return detail::build_table(rep, false, "Independent augmentation methods");
}

/// Combined augmentations: baseline, then one best row per combined plan.
inline ReportTable table_combined(const EvalReport& rep) {
  return detail::build_table(rep, true, "Combined augmentation methods");
}

inline void write_metadata(std::ostream& out, const EvalReport& rep) {
  out << "# seed=" << rep.seed << '\n';
  out << "# provider=" << rep.provider << '\n';
  out << "# calibration=" << calibration_name(rep.calibration) << '\n';
  out << "# gamma=" << (rep.gamma ? csv::format_double(*rep.gamma) : std::string("auto")) << '\n';
  out << "# eval_users=" << rep.eval_users.size() << '\n';
}

/// Aligned human-readable table; '*' marks rows above the baseline accuracy.
inline void write_table_text(std::ostream& out, const ReportTable& t, const EvalReport& rep) {
  out << t.title << '\n';
  out << "provider: " << rep.provider << "   calibration: " << calibration_name(rep.calibration)
      << "   gamma: " << (rep.gamma ? csv::format_double(*rep.gamma) : std::string("auto")) << "   seed: " << rep.seed
      << "   users: " << rep.eval_users.size() << "\n\n";
  std::size_t value_width = 5;
  for (const auto& r : t.rows) value_width = std::max(value_width, r.value.size());
  const int vw = static_cast<int>(value_width);
  auto format_row = [&](const char* method, const char* value, const char* kernel, const char* c, const char* acc,
                        const char* far, const char* frr) {
    char buf[128];
    std::string s = method;
    s.resize(std::max<std::size_t>(s.size() + 1, 33), ' ');
    s += value;
    s.resize(s.size() + static_cast<std::size_t>(vw) - std::min(value_width, std::strlen(value)) + 1, ' ');
    std::snprintf(buf, sizeof buf, "%-6s %6s %10s %8s %8s\n", kernel, c, acc, far, frr);
    return s + buf;
  };
  const std::string header = format_row("Augmentation method", "Value", "Kernel", "C", "Accuracy", "FAR", "FRR");
  out << header << std::string(header.size() - 1, '-') << '\n';
  std::string section;
  for (const auto& r : t.rows) {
    if (r.section != section) {
      section = r.section;
      out << section << '\n';
    }
    const std::string acc = detail::percent(r.accuracy) + (r.exceeds_baseline ? "*" : " ");
    const std::string method = "  " + (r.baseline ? std::string("-") : r.method);
    out << format_row(method.c_str(), r.baseline ? "-" : r.value.c_str(), std::string(kernel_name(r.kernel)).c_str(),
                      detail::format_param(r.C).c_str(), acc.c_str(), detail::percent(r.far).c_str(),
                      detail::percent(r.frr).c_str());
  }
}

inline void write_table_csv(std::ostream& out, const ReportTable& t) {
  out << "section,method,value,ratio,kernel,C,accuracy,far,frr,exceeds_baseline\n";
  for (const auto& r : t.rows)
    out << r.section << ',' << r.method << ',' << r.value << ',' << csv::format_double(r.ratio) << ','
        << kernel_name(r.kernel) << ',' << csv::format_double(r.C) << ',' << csv::format_double(r.accuracy) << ','
        << csv::format_double(r.far) << ',' << csv::format_double(r.frr) << ',' << (r.exceeds_baseline ? 1 : 0)
        << '\n';
}

/// Reads a table written by write_table_csv.
inline ReportTable read_table_csv(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != "section,method,value,ratio,kernel,C,accuracy,far,frr,exceeds_baseline")
    throw ParseError("not a report table", reader.number());
  ReportTable t;
  while (reader.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != 10) throw ParseError("expected 10 fields", reader.number());
    ReportRow r;
    r.section = f[0];
    r.method = f[1];
    r.value = f[2];
    const auto k = parse_kernel(f[4]);
    std::uint64_t marker = 0;
    if (!k || !csv::parse_double(f[3], r.ratio) || !csv::parse_double(f[5], r.C) ||
        !csv::parse_double(f[6], r.accuracy) || !csv::parse_double(f[7], r.far) || !csv::parse_double(f[8], r.frr) ||
        !csv::parse_uint(f[9], marker) || marker > 1)
      throw ParseError("malformed report row", reader.number());
    r.kernel = *k;
    r.exceeds_baseline = marker == 1;
    r.baseline = r.section == "No augmentation";
    t.rows.push_back(std::move(r));
  }
  return t;
}

/// Recomputes every marker from the table's own numbers; returns the
/// violations (empty when consistent).
inline std::vector<std::string> check_markers(const ReportTable& t) {
  std::vector<std::string> problems;
  std::size_t baselines = 0;
  double base = 0.0;
  for (const auto& r : t.rows)
    if (r.baseline) {
      ++baselines;
      base = r.accuracy;
    }
  if (baselines != 1) {
    problems.push_back("expected exactly one baseline row, found " + std::to_string(baselines));
    return problems;
  }
  for (const auto& r : t.rows) {
    const bool expected = !r.baseline && r.accuracy > base;
    if (expected != r.exceeds_baseline)
      problems.push_back("row '" + r.method + " " + r.value + "' marker is " + (r.exceeds_baseline ? "set" : "unset") +
                         " but accuracy " + csv::format_double(r.accuracy) + " vs baseline " +
                         csv::format_double(base));
  }
  return problems;
}

inline constexpr std::string_view kCellsHeader =
    "family,value,param,ratio,kernel,C,gamma,n_train_pos,n_train_neg,accuracy,far,frr,best,description";

/// Machine-readable dump of every cell's means, preceded by metadata comments.
inline void write_cells_csv(std::ostream& out, const EvalReport& rep) {
  write_metadata(out, rep);
  out << kCellsHeader << '\n';
  for (const auto& c : rep.cells) {
    out << family_key(c.key.family) << ',' << c.key.value << ','
        << (std::isnan(c.param) ? std::string() : csv::format_double(c.param)) << ','
        << csv::format_double(c.key.ratio) << ',' << kernel_name(c.key.kernel) << ',' << csv::format_double(c.key.C)
        << ',' << csv::format_double(c.mean_gamma) << ',' << c.n_train_pos << ',' << c.n_train_neg << ','
        << csv::format_double(c.mean_accuracy) << ',' << csv::format_double(c.mean_far) << ','
        << csv::format_double(c.mean_frr) << ',' << (c.best ? 1 : 0) << ',' << c.description << '\n';
  }
}

inline void write_per_user_csv(std::ostream& out, const EvalReport& rep) {
  write_metadata(out, rep);
  out << "family,value,ratio,kernel,C,user,accuracy,far,frr,gamma,balanced\n";
  for (const auto& c : rep.cells)
    for (const auto& u : c.per_user)
      out << family_key(c.key.family) << ',' << c.key.value << ',' << csv::format_double(c.key.ratio) << ','
          << kernel_name(c.key.kernel) << ',' << csv::format_double(c.key.C) << ',' << u.user << ','
          << csv::format_double(u.accuracy) << ',' << csv::format_double(u.far) << ',' << csv::format_double(u.frr)
          << ',' << csv::format_double(u.gamma) << ',' << (u.within_target ? 1 : 0) << '\n';
}

/// Reads a cells dump back into a report (means only; no per-user rows).
inline EvalReport read_cells_csv(std::istream& in) {
  csv::LineReader reader(in);
  EvalReport rep;
  std::string line;
  std::size_t n_users = 0;
  while (reader.next(line) && line.starts_with("#")) {
    const auto body = std::string_view(line).substr(1);
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = csv::trim(body.substr(0, eq));
    const auto value = csv::trim(body.substr(eq + 1));
    std::uint64_t u = 0;
    double g = 0.0;
    if (key == "seed" && csv::parse_uint(value, u)) rep.seed = u;
    else if (key == "provider") rep.provider = value;
    else if (key == "calibration") rep.calibration = value == "train" ? CalibrationMode::Train : CalibrationMode::Test;
    else if (key == "gamma" && csv::parse_double(value, g)) rep.gamma = g;
    else if (key == "eval_users" && csv::parse_uint(value, u)) n_users = u;
  }
  rep.eval_users.assign(n_users, std::string());
  if (line != kCellsHeader) throw ParseError("not a cells dump (bad header)", reader.number());
  while (reader.next(line)) {
    const auto f = csv::split(line);
    const std::size_t ln = reader.number();
    if (f.size() != 14) throw ParseError("expected 14 fields", ln);
    CellReport c;
    bool family_ok = false;
    for (Family fam : {Family::None, Family::Noise, Family::Temporal, Family::Intensity, Family::Warp,
                       Family::Combined})
      if (family_key(fam) == f[0]) {
        c.key.family = fam;
        family_ok = true;
      }
    const auto k = parse_kernel(f[4]);
    std::uint64_t pos = 0, neg = 0, best = 0;
    if (!family_ok || !k || !csv::parse_double(f[3], c.key.ratio) || !csv::parse_double(f[5], c.key.C) ||
        !csv::parse_double(f[6], c.mean_gamma) || !csv::parse_uint(f[7], pos) || !csv::parse_uint(f[8], neg) ||
        !csv::parse_double(f[9], c.mean_accuracy) || !csv::parse_double(f[10], c.mean_far) ||
        !csv::parse_double(f[11], c.mean_frr) || !csv::parse_uint(f[12], best))
      throw ParseError("malformed cell row", ln);
    c.key.value = f[1];
    c.key.kernel = *k;
    if (!csv::trim(f[2]).empty() && !csv::parse_double(f[2], c.param)) throw ParseError("malformed param", ln);
    c.n_train_pos = pos;
    c.n_train_neg = neg;
    c.best = best == 1;
    c.description = f[13];
    rep.cells.push_back(std::move(c));
  }
  if (!rep.best_baseline()) throw ParseError("cells dump has no best baseline cell", reader.number());
  return rep;
}

}  // namespace motionaug
