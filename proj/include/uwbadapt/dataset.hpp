#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "link_state.hpp"
#include "phy_actions.hpp"

namespace uwbadapt {

/// Ordered (tag, anchor) pair.
struct LinkId {
  std::string tag;
  std::string anchor;

  friend auto operator<=>(const LinkId&, const LinkId&) = default;
  friend bool operator==(const LinkId&, const LinkId&) = default;
};

inline std::string to_string(const LinkId& l) { return l.tag + "->" + l.anchor; }

inline LinkId parse_link(std::string_view text) {
  const auto pos = text.find("->");
  if (pos == std::string_view::npos || pos == 0 || pos + 2 >= text.size())
    throw ConfigError("link id must look like TAG->ANCHOR: " + std::string(text));
  return {std::string(text.substr(0, pos)), std::string(text.substr(pos + 2))};
}

/// One ranging attempt.
struct RangeRecord {
  std::uint64_t seq = 0;
  std::string tag_id;
  std::string anchor_id;
  PhySetting setting;
  bool received = false;
  std::optional<RawDiagnostics> diagnostics;  // iff received
  std::optional<double> est_range_m;          // iff received
  double true_dist_m = 1.0;
};

/// A received attempt reduced to what the environment needs.
struct FeatureSample {
  RawDiagnostics raw;
  DerivedFeatures derived;
  LinkFeatures features{};
  double range_error_mm = 0;
};

struct LinkSettingStats {
  std::size_t attempts = 0;
  std::size_t received = 0;
  double prr = 0;
  std::vector<FeatureSample> feature_pool;
  double mean_abs_range_error_mm = 0;
};

/// Immutable per-(link, setting) statistics.
class DatasetStore {
 public:
  DatasetStore() = default;
  DatasetStore(std::vector<LinkId> links, std::vector<std::vector<LinkSettingStats>> stats,
               std::size_t inconsistent_power_records = 0)
      : links_(std::move(links)), stats_(std::move(stats)),
        inconsistent_(inconsistent_power_records) {
    for (std::size_t i = 0; i < links_.size(); ++i) {
      index_.emplace(links_[i], i);
      bool any = false;
      for (const auto& s : stats_[i]) any = any || s.received > 0;
      if (any) active_.push_back(i);
    }
  }

  std::size_t num_links() const noexcept { return links_.size(); }
  const std::vector<LinkId>& links() const noexcept { return links_; }
  const LinkId& link(std::size_t i) const { return links_.at(i); }

  std::optional<std::size_t> find_link(const LinkId& l) const {
    auto it = index_.find(l);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t link_index(const LinkId& l) const {
    if (auto i = find_link(l)) return *i;
    throw ConfigError("unknown link " + to_string(l));
  }

  const LinkSettingStats& stats(std::size_t link, std::size_t action) const {
    return stats_.at(link).at(action);
  }
  double prr(std::size_t link, std::size_t action) const { return stats(link, action).prr; }

  /// Links with at least one reception under some setting.
  const std::vector<std::size_t>& active_links() const noexcept { return active_; }

  std::size_t total_received() const {
    std::size_t n = 0;
    for (const auto& row : stats_)
      for (const auto& s : row) n += s.received;
    return n;
  }
  std::size_t inconsistent_power_records() const noexcept { return inconsistent_; }

 private:
  std::vector<LinkId> links_;
  std::vector<std::vector<LinkSettingStats>> stats_;
  std::map<LinkId, std::size_t> index_;
  std::vector<std::size_t> active_;
  std::size_t inconsistent_ = 0;
};

/// Accumulates records into a DatasetStore.
class StoreBuilder {
 public:
  /// line is used only for error messages (0 when unknown).
  void add(const RangeRecord& r, std::size_t line = 0) {
    if (!is_valid(r.setting)) throw SchemaError("unknown setting tuple " + to_string(r.setting), line);
    if (!(r.true_dist_m > 0)) throw SchemaError("true_dist_m must be positive", line);
    auto& row = row_for({r.tag_id, r.anchor_id});
    auto& acc = row[action_space().index_of(r.setting)];
    ++acc.rows;
    if (!r.received) {
      if (r.diagnostics || r.est_range_m)
        throw SchemaError("unreceived attempt must not carry diagnostics", line);
      saw_failures_ = true;
      return;
    }
    if (!r.diagnostics || !r.est_range_m)
      throw SchemaError("received attempt is missing diagnostics or range", line);
    FeatureSample fs;
    fs.raw = *r.diagnostics;
    try {
      fs.derived = derive_features(fs.raw, r.setting.prf_mhz);
    } catch (const Error& e) {
      throw SchemaError(std::string("invalid diagnostics: ") + e.what(), line);
    }
    if (fs.derived.power_inconsistent) ++inconsistent_;
    fs.features = select_link_features(fs.derived, fs.raw);
    for (double v : fs.features)
      if (!std::isfinite(v)) throw SchemaError("non-finite derived feature", line);
    fs.range_error_mm = std::abs(*r.est_range_m - r.true_dist_m) * 1000.0;
    ++acc.received;
    acc.pool.push_back(fs);
  }

  /// If no unreceived rows were seen, every combination is assumed to have had
  /// attempts_per_combination attempts.
  DatasetStore finish(std::size_t attempts_per_combination = 500) {
    if (attempts_per_combination == 0) throw ConfigError("attempts_per_combination must be >= 1");
    const bool success_only = !saw_failures_;
    std::vector<LinkId> links;
    std::vector<std::vector<LinkSettingStats>> stats;
    for (auto& [link, row] : rows_) {
      links.push_back(link);
      std::vector<LinkSettingStats> out(action_space().size());
      for (std::size_t a = 0; a < out.size(); ++a) {
        auto& acc = row[a];
        auto& s = out[a];
        s.received = acc.received;
        s.attempts = success_only ? attempts_per_combination : acc.rows;
        if (s.received > s.attempts)
          throw SchemaError("combination " + to_string(link) + " / " +
                            to_string(action_space()[a]) + " has more receptions than attempts");
        s.prr = s.attempts ? static_cast<double>(s.received) / static_cast<double>(s.attempts) : 0.0;
        double err = 0;
        for (const auto& f : acc.pool) err += f.range_error_mm;
        s.mean_abs_range_error_mm = acc.pool.empty() ? 0.0 : err / static_cast<double>(acc.pool.size());
        s.feature_pool = std::move(acc.pool);
      }
      stats.push_back(std::move(out));
    }
    rows_.clear();
    return DatasetStore(std::move(links), std::move(stats), inconsistent_);
  }

 private:
  struct Accumulator {
    std::size_t rows = 0;
    std::size_t received = 0;
    std::vector<FeatureSample> pool;
  };
  std::vector<Accumulator>& row_for(const LinkId& l) {
    auto it = rows_.find(l);
    if (it == rows_.end()) it = rows_.emplace(l, std::vector<Accumulator>(action_space().size())).first;
    return it->second;
  }

  std::map<LinkId, std::vector<Accumulator>> rows_;
  bool saw_failures_ = false;
  std::size_t inconsistent_ = 0;
};

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::array<const char*, 21> kCsvColumns{
    "seq",       "tag_id",     "anchor_id", "channel",  "psr",     "prf",     "rate",
    "gain",      "received",   "f1",        "f2",       "f3",      "cir_power", "noise_std",
    "rx_pacc",   "fp_index",   "lde",       "pp_amp",   "pp_index", "est_range_m", "true_dist_m"};

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view column) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw SchemaError("bad number '" + std::string(s) + "' in column " + std::string(column), line);
  return v;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace detail

/// Maps canonical column names to source column names. Canonical columns
/// without an entry keep their own name.
struct ColumnMapping {
  std::map<std::string, std::string> source_for;

  static ColumnMapping from_json(const nlohmann::json& j) {
    ColumnMapping m;
    try {
      for (auto& [k, v] : j.at("columns").items()) m.source_for[k] = v.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("column mapping: ") + e.what());
    }
    for (const auto& [k, v] : m.source_for)
      if (std::find_if(kCsvColumns.begin(), kCsvColumns.end(),
                       [&](const char* c) { return k == c; }) == kCsvColumns.end())
        throw SchemaError("column mapping names unknown canonical column '" + k + "'");
    return m;
  }
  std::string source(const std::string& canonical) const {
    auto it = source_for.find(canonical);
    return it == source_for.end() ? canonical : it->second;
  }
};

/// Streams records from a CSV file. `seq` and `received` may be absent
/// (row number / all received); every other column is required.
template <class Fn>
void read_records_csv(std::istream& in, Fn&& on_record, const ColumnMapping& mapping = {}) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty dataset file: missing header", 1);
  const auto header = detail::split_csv(line);
  std::array<int, kCsvColumns.size()> pos{};
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    const auto src = mapping.source(kCsvColumns[c]);
    auto it = std::find(header.begin(), header.end(), src);
    pos[c] = it == header.end() ? -1 : static_cast<int>(it - header.begin());
    const bool optional = c == 0 || c == 8;
    if (pos[c] < 0 && !optional) throw SchemaError("missing column '" + src + "' in header", 1);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size())
      throw SchemaError("expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(f.size()),
                        lineno);
    auto cell = [&](std::size_t c) -> std::string_view { return pos[c] < 0 ? std::string_view{} : f[pos[c]]; };
    auto num = [&](std::size_t c) { return detail::parse_double(cell(c), lineno, kCsvColumns[c]); };

    RangeRecord r;
    r.seq = pos[0] < 0 ? lineno - 1 : static_cast<std::uint64_t>(num(0));
    r.tag_id = std::string(cell(1));
    r.anchor_id = std::string(cell(2));
    if (r.tag_id.empty() || r.anchor_id.empty()) throw SchemaError("empty node id", lineno);
    r.setting = {static_cast<int>(num(3)), static_cast<int>(num(4)), static_cast<int>(num(5)),
                 static_cast<int>(num(6)), num(7)};
    if (!is_valid(r.setting)) throw SchemaError("unknown setting tuple " + to_string(r.setting), lineno);
    if (pos[8] < 0) {
      r.received = true;
    } else {
      const auto v = cell(8);
      if (v == "1" || v == "true" || v == "True") r.received = true;
      else if (v == "0" || v == "false" || v == "False") r.received = false;
      else throw SchemaError("bad received flag '" + std::string(v) + "'", lineno);
    }
    r.true_dist_m = num(20);
    if (r.received) {
      RawDiagnostics d;
      d.f1 = num(9);
      d.f2 = num(10);
      d.f3 = num(11);
      d.cir_power = num(12);
      d.noise_std = num(13);
      d.rx_pacc = num(14);
      d.fp_index = num(15);
      d.lde_threshold = num(16);
      d.pp_amp = num(17);
      d.pp_index = num(18);
      r.diagnostics = d;
      r.est_range_m = num(19);
    } else {
      for (std::size_t c = 9; c <= 19; ++c)
        if (!cell(c).empty()) throw SchemaError("unreceived attempt has diagnostic values", lineno);
    }
    on_record(r, lineno);
  }
}

struct LoadOptions {
  std::size_t attempts_per_combination = 500;
  ColumnMapping mapping;
};

inline DatasetStore load_dataset(std::istream& in, const LoadOptions& opt = {}) {
  StoreBuilder b;
  read_records_csv(in, [&](const RangeRecord& r, std::size_t line) { b.add(r, line); }, opt.mapping);
  return b.finish(opt.attempts_per_combination);
}

inline DatasetStore load_dataset(const std::string& path, const LoadOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);
  return load_dataset(in, opt);
}

class CsvRecordWriter {
 public:
  explicit CsvRecordWriter(std::ostream& out) : out_(out) {
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) out_ << (c ? "," : "") << kCsvColumns[c];
    out_ << '\n';
  }

  void write(const RangeRecord& r) {
    using detail::format_double;
    const auto& s = r.setting;
    out_ << r.seq << ',' << r.tag_id << ',' << r.anchor_id << ',' << s.channel << ',' << s.psr << ','
         << s.prf_mhz << ',' << s.data_rate_kbps << ',' << format_double(s.tx_gain_db) << ','
         << (r.received ? 1 : 0);
    if (r.received && r.diagnostics && r.est_range_m) {
      const auto& d = *r.diagnostics;
      for (double v : {d.f1, d.f2, d.f3, d.cir_power, d.noise_std, d.rx_pacc, d.fp_index,
                       d.lde_threshold, d.pp_amp, d.pp_index, *r.est_range_m})
        out_ << ',' << format_double(v);
    } else {
      out_ << ",,,,,,,,,,,";
    }
    out_ << ',' << format_double(r.true_dist_m) << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace uwbadapt
