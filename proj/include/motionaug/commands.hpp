#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <locale>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "motionaug/augmentation.hpp"
#include "motionaug/config.hpp"
#include "motionaug/dataset.hpp"
#include "motionaug/error.hpp"
#include "motionaug/protocol.hpp"
#include "motionaug/report.hpp"
#include "motionaug/synth.hpp"

namespace motionaug::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Runs `fn`, printing any exception to `err` and mapping it to an exit code.
inline int guarded(std::ostream& err, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NotFound& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ConvergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kNumericalError;
  }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.imbue(std::locale::classic());
  return out;
}

// synth ---------------------------------------------------------------------

inline int cmd_synth(const SynthConfig& cfg, const std::string& output, std::ostream& out) {
  const Dataset ds = generate(cfg);
  auto file = open_output(output);
  write_dataset(file, ds);
  out << "wrote " << ds.samples.size() << " samples for " << ds.users.size() << " users to " << output << '\n';
  return kOk;
}

// validate ------------------------------------------------------------------

enum class FileKind { Dataset, Embeddings, Unknown };

/// Sniffs the header row (after any leading '#' comment).
inline FileKind detect_kind(const std::string& path) {
  auto in = csv::open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto t = csv::trim(line);
    if (t.empty() || t.starts_with("#")) continue;
    if (t.starts_with("user_id,event_index,channel")) return FileKind::Dataset;
    if (t.starts_with("user_id,event_index,e1")) return FileKind::Embeddings;
    return FileKind::Unknown;
  }
  return FileKind::Unknown;
}

inline int cmd_validate(const std::string& path, std::ostream& out) {
  switch (detect_kind(path)) {
    case FileKind::Dataset: {
      const Dataset ds = load_dataset(path);
      ds.validate();
      std::size_t lo = ds.samples.size(), hi = 0;
      for (const auto& [u, idx] : ds.index_by_user()) {
        lo = std::min(lo, idx.size());
        hi = std::max(hi, idx.size());
      }
      const auto& s = ds.samples.front().signal;
      out << "dataset ok: " << ds.samples.size() << " samples, " << ds.users.size() << " users, " << s.n_channels()
          << " channels, length " << s.length() << ", " << s.sample_rate_hz() << " Hz, " << lo << "-" << hi
          << " samples per user\n";
      return kOk;
    }
    case FileKind::Embeddings: {
      const EmbeddingTable t = load_embeddings(path);
      out << "embeddings ok: " << t.vectors.size() << " vectors of dimension " << t.dim << '\n';
      return kOk;
    }
    case FileKind::Unknown:
      break;
  }
  throw ParseError("unrecognised header in " + path, 0);
}

// augment -------------------------------------------------------------------

struct AugmentArgs {
  std::string input;
  std::string output;
  AugmentationSpec spec;
  std::uint64_t seed = 0;
  std::optional<std::string> plot_data;
};

/// Augments every sample of a file with one spec. Sample i draws from
/// mix(seed, i, method ordinal). The plot-data file pairs each original
/// channel with its augmented version: user_id,event_index,channel,t,original,augmented.
inline int cmd_augment(const AugmentArgs& args, std::ostream& out) {
  args.spec.validate();
  const Dataset in = load_dataset(args.input);
  in.validate();
  AugmentationPlan plan;
  plan.specs = {args.spec};
  plan.base_seed = args.seed;
  Dataset result = in;
  for (std::size_t i = 0; i < result.samples.size(); ++i)
    result.samples[i].signal = augment_sample(in.samples[i].signal, i, plan);
  {
    auto file = open_output(args.output);
    write_dataset(file, result);
  }
  if (args.plot_data) {
    auto plot = open_output(*args.plot_data);
    plot << "user_id,event_index,channel,t,original,augmented\n";
    for (std::size_t i = 0; i < in.samples.size(); ++i) {
      const auto& a = in.samples[i];
      const auto& b = result.samples[i];
      for (std::size_t c = 0; c < a.signal.n_channels(); ++c)
        for (std::size_t t = 0; t < a.signal.length(); ++t)
          plot << a.user_id << ',' << a.event_index << ',' << c << ',' << t << ','
               << csv::format_double(a.signal(c, t)) << ',' << csv::format_double(b.signal(c, t)) << '\n';
    }
  }
  out << "augmented " << result.samples.size() << " samples with " << method_name(args.spec.method) << '\n';
  return kOk;
}

// sweep / report ------------------------------------------------------------

/// Writes the full output set of a sweep into `dir`.
inline void write_report_files(const EvalReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const ReportTable t1 = table_independent(rep);
  const ReportTable t2 = table_combined(rep);
  {
    auto f = open_output(dir / "table_independent.txt");
    write_table_text(f, t1, rep);
  }
  {
    auto f = open_output(dir / "table_independent.csv");
    write_table_csv(f, t1);
  }
  {
    auto f = open_output(dir / "table_combined.txt");
    write_table_text(f, t2, rep);
  }
  {
    auto f = open_output(dir / "table_combined.csv");
    write_table_csv(f, t2);
  }
  {
    auto f = open_output(dir / "cells.csv");
    write_cells_csv(f, rep);
  }
  if (!rep.cells.empty() && !rep.cells.front().per_user.empty()) {
    auto f = open_output(dir / "per_user.csv");
    write_per_user_csv(f, rep);
  }
}

struct SweepArgs {
  std::string config;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

inline Dataset load_sweep_dataset(const DatasetSource& src) {
  return src.path ? load_dataset(*src.path) : generate(*src.synthetic);
}

inline int cmd_sweep(const SweepArgs& args, std::ostream& out) {
  SweepConfig sc = load_sweep_config(args.config);
  if (args.seed) sc.experiment.seed = *args.seed;
  if (args.threads) sc.experiment.threads = *args.threads;
  validate_config(sc.experiment);
  const auto provider = EmbeddingProvider::parse(sc.experiment.provider);
  const Dataset ds = load_sweep_dataset(sc.dataset);
  const EvalReport rep = run_experiment(ds, provider, sc.experiment);
  write_report_files(rep, args.output_dir);
  const auto* base = rep.best_baseline();
  out << "sweep done: " << rep.cells.size() << " cells over " << rep.eval_users.size()
      << " users; baseline accuracy " << detail::percent(base->mean_accuracy) << "; reports in " << args.output_dir
      << '\n';
  return kOk;
}

/// Regenerates the tables from a cells dump, or checks the markers of an
/// emitted table.
inline int cmd_report(const std::optional<std::string>& cells, const std::optional<std::string>& output_dir,
                      const std::optional<std::string>& check, std::ostream& out, std::ostream& err) {
  if (!cells && !check) throw ConfigError("report needs --cells or --check");
  if (cells) {
    auto in = csv::open_input(*cells);
    const EvalReport rep = read_cells_csv(in);
    if (output_dir) {
      write_report_files(rep, *output_dir);
      out << "tables written to " << *output_dir << '\n';
    } else {
      write_table_text(out, table_independent(rep), rep);
      out << '\n';
      write_table_text(out, table_combined(rep), rep);
    }
  }
  if (check) {
    auto in = csv::open_input(*check);
    const auto problems = check_markers(read_table_csv(in));
    for (const auto& p : problems) err << "inconsistent: " << p << '\n';
    if (!problems.empty()) return kDataError;
    out << "markers consistent: " << *check << '\n';
  }
  return kOk;
}

}  // namespace motionaug::cli
