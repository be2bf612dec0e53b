#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "motionaug/error.hpp"
#include "motionaug/signal.hpp"

namespace motionaug {

using SampleKey = std::pair<std::string, std::uint64_t>;

inline std::string key_string(const SampleKey& k) {
  return "(" + k.first + ", " + std::to_string(k.second) + ")";
}

struct GestureSample {
  std::string user_id;
  std::uint64_t event_index = 0;
  Signal signal;

  SampleKey key() const { return {user_id, event_index}; }
  friend bool operator==(const GestureSample&, const GestureSample&) = default;
};

/// Samples plus the user ids in order of first appearance.
struct Dataset {
  std::vector<GestureSample> samples;
  std::vector<std::string> users;

  /// Indices into `samples` for one user, sorted by event_index.
  std::vector<std::size_t> samples_of(const std::string& user) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].user_id == user) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return samples[a].event_index < samples[b].event_index;
    });
    return idx;
  }

  /// Per-user sample indices for every user, sorted by event_index.
  std::map<std::string, std::vector<std::size_t>> index_by_user() const {
    std::map<std::string, std::vector<std::size_t>> m;
    for (std::size_t i = 0; i < samples.size(); ++i) m[samples[i].user_id].push_back(i);
    for (auto& [u, idx] : m)
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].event_index < samples[b].event_index;
      });
    return m;
  }

  /// Checks the shared-shape and unique-key invariants.
  void validate() const {
    std::set<SampleKey> seen;
    std::set<std::string> user_set(users.begin(), users.end());
    for (const auto& s : samples) {
      if (!seen.insert(s.key()).second) throw InvalidArgument("duplicate key " + key_string(s.key()));
      if (!user_set.count(s.user_id)) throw InvalidArgument("sample of unlisted user " + s.user_id);
      const auto& f = samples.front().signal;
      if (s.signal.n_channels() != f.n_channels() || s.signal.length() != f.length() ||
          s.signal.sample_rate_hz() != f.sample_rate_hz())
        throw InvalidArgument("inconsistent signal shape at " + key_string(s.key()));
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace csv {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Locale-independent double parse; accepts decimal and scientific notation.
inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_uint(std::string_view s, std::uint64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Reads lines, tracking 1-based line numbers; skips blank lines.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  std::size_t number() const noexcept { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  return in;
}

}  // namespace csv

/// Windowed-sample format:
///   [# sample_rate_hz=<hz>]
///   user_id,event_index,channel,v1,...,vN
///   <user>,<event>,<c>,<N values>      one row per channel, channels 0..C-1 in order
inline Dataset read_dataset(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  double rate = 100.0;
  if (!reader.next(line)) throw ParseError("empty dataset file", reader.number());
  if (csv::trim(line).starts_with("#")) {
    auto body = csv::trim(std::string_view(line).substr(1));
    constexpr std::string_view key = "sample_rate_hz=";
    if (!body.starts_with(key) || !csv::parse_double(body.substr(key.size()), rate) || !(rate > 0.0))
      throw ParseError("expected '# sample_rate_hz=<positive number>'", reader.number());
    if (!reader.next(line)) throw ParseError("missing header", reader.number());
  }

  const auto header = csv::split(line);
  if (header.size() < 5 || csv::trim(header[0]) != "user_id" || csv::trim(header[1]) != "event_index" ||
      csv::trim(header[2]) != "channel")
    throw ParseError("header must be user_id,event_index,channel,v1..vN with N >= 2", reader.number());
  for (std::size_t i = 3; i < header.size(); ++i)
    if (csv::trim(header[i]) != "v" + std::to_string(i - 2))
      throw ParseError("header column " + std::to_string(i + 1) + " must be v" + std::to_string(i - 2),
                       reader.number());
  const std::size_t length = header.size() - 3;

  Dataset ds;
  std::set<SampleKey> seen;
  std::set<std::string> user_seen;
  std::size_t n_channels = 0;  // fixed by the first completed sample

  SampleKey current;
  std::vector<std::vector<double>> rows;
  std::size_t block_line = 0;

  auto flush = [&]() {
    if (rows.empty()) return;
    if (n_channels == 0) n_channels = rows.size();
    if (rows.size() != n_channels)
      throw ParseError("sample " + key_string(current) + " has " + std::to_string(rows.size()) +
                           " channels, expected " + std::to_string(n_channels),
                       block_line);
    if (user_seen.insert(current.first).second) ds.users.push_back(current.first);
    ds.samples.push_back({current.first, current.second, Signal(rows, rate)});
    rows.clear();
  };

  while (reader.next(line)) {
    const auto fields = csv::split(line);
    const std::size_t ln = reader.number();
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       ln);
    SampleKey key{std::string(csv::trim(fields[0])), 0};
    if (key.first.empty()) throw ParseError("empty user_id", ln);
    std::uint64_t channel = 0;
    if (!csv::parse_uint(fields[1], key.second)) throw ParseError("bad event_index", ln);
    if (!csv::parse_uint(fields[2], channel)) throw ParseError("bad channel", ln);

    if (rows.empty() || key != current) {
      flush();
      if (!seen.insert(key).second) throw ParseError("duplicate key " + key_string(key), ln);
      current = key;
      block_line = ln;
    }
    if (channel != rows.size())
      throw ParseError("channel " + std::to_string(channel) + " out of order for " + key_string(key) +
                           ", expected " + std::to_string(rows.size()),
                       ln);
    std::vector<double> values(length);
    for (std::size_t i = 0; i < length; ++i)
      if (!csv::parse_double(fields[3 + i], values[i]))
        throw ParseError("non-numeric value in column " + std::to_string(4 + i), ln);
    rows.push_back(std::move(values));
  }
  flush();
  if (ds.samples.empty()) throw ParseError("no samples", reader.number());
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  auto in = csv::open_input(path);
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
  if (ds.samples.empty()) throw InvalidArgument("write_dataset: empty dataset");
  const auto& first = ds.samples.front().signal;
  out << "# sample_rate_hz=" << csv::format_double(first.sample_rate_hz()) << '\n';
  out << "user_id,event_index,channel";
  for (std::size_t i = 1; i <= first.length(); ++i) out << ",v" << i;
  out << '\n';
  std::string row;
  for (const auto& s : ds.samples) {
    for (std::size_t c = 0; c < s.signal.n_channels(); ++c) {
      row = s.user_id + ',' + std::to_string(s.event_index) + ',' + std::to_string(c);
      for (double v : s.signal.channel(c)) {
        row += ',';
        row += csv::format_double(v);
      }
      row += '\n';
      out << row;
    }
  }
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_dataset(out, ds);
}

/// Externally computed embeddings keyed by (user_id, event_index).
struct EmbeddingTable {
  std::size_t dim = 0;
  std::map<SampleKey, std::vector<double>> vectors;
};

/// Embedding format: header user_id,event_index,e1..eD then one row per sample.
inline EmbeddingTable read_embeddings(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("no embeddings", reader.number());
  const auto header = csv::split(line);
  if (header.size() < 3 || csv::trim(header[0]) != "user_id" || csv::trim(header[1]) != "event_index")
    throw ParseError("header must be user_id,event_index,e1..eD", reader.number());
  for (std::size_t i = 2; i < header.size(); ++i)
    if (csv::trim(header[i]) != "e" + std::to_string(i - 1))
      throw ParseError("header column " + std::to_string(i + 1) + " must be e" + std::to_string(i - 1),
                       reader.number());

  EmbeddingTable table;
  table.dim = header.size() - 2;
  std::size_t row_index = 0;
  while (reader.next(line)) {
    const auto fields = csv::split(line);
    const std::size_t ln = reader.number();
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(row_index) + ": dimension mismatch, expected " +
                           std::to_string(table.dim) + " components",
                       ln);
    SampleKey key{std::string(csv::trim(fields[0])), 0};
    if (key.first.empty()) throw ParseError("row " + std::to_string(row_index) + ": empty user_id", ln);
    if (!csv::parse_uint(fields[1], key.second))
      throw ParseError("row " + std::to_string(row_index) + ": bad event_index", ln);
    std::vector<double> v(table.dim);
    for (std::size_t i = 0; i < table.dim; ++i)
      if (!csv::parse_double(fields[2 + i], v[i]))
        throw ParseError("row " + std::to_string(row_index) + ": non-numeric field e" + std::to_string(i + 1),
                         ln);
    if (!table.vectors.emplace(key, std::move(v)).second)
      throw ParseError("duplicate key " + key_string(key), ln);
    ++row_index;
  }
  if (table.vectors.empty()) throw ParseError("no embeddings", reader.number());
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  auto in = csv::open_input(path);
  return read_embeddings(in);
}

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << "user_id,event_index";
  for (std::size_t i = 1; i <= table.dim; ++i) out << ",e" << i;
  out << '\n';
  for (const auto& [key, v] : table.vectors) {
    out << key.first << ',' << key.second;
    for (double x : v) out << ',' << csv::format_double(x);
    out << '\n';
  }
}

}  // namespace motionaug
