#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace uwbadapt {

/// Enumerated domains of the configurable UWB PHY fields.
namespace domain {
inline constexpr std::array<int, 3> kChannels{3, 5, 7};
inline constexpr std::array<int, 3> kPsr{128, 1024, 4096};
inline constexpr std::array<int, 2> kPrfMhz{16, 64};
inline constexpr std::array<int, 2> kDataRateKbps{110, 6800};
inline constexpr std::array<double, 2> kTxGainDb{0.0, 10.5};
}  // namespace domain

/// One configurable PHY tuple {channel, PSR, PRF, data rate, TX gain}.
struct PhySetting {
  int channel = 3;
  int psr = 128;
  int prf_mhz = 16;
  int data_rate_kbps = 110;
  double tx_gain_db = 0.0;

  friend bool operator==(const PhySetting&, const PhySetting&) = default;
};

namespace detail {
template <class Domain, class T>
std::optional<std::size_t> position(const Domain& d, T v) {
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] == v) return i;
  return std::nullopt;
}
}  // namespace detail

inline bool is_valid(const PhySetting& s) {
  return detail::position(domain::kChannels, s.channel) &&
         detail::position(domain::kPsr, s.psr) &&
         detail::position(domain::kPrfMhz, s.prf_mhz) &&
         detail::position(domain::kDataRateKbps, s.data_rate_kbps) &&
         detail::position(domain::kTxGainDb, s.tx_gain_db);
}

inline std::string to_string(const PhySetting& s) {
  std::ostringstream os;
  os << "channel=" << s.channel << ",psr=" << s.psr << ",prf=" << s.prf_mhz
     << ",rate=" << s.data_rate_kbps << ",gain=" << s.tx_gain_db;
  return os.str();
}

/// Throws ConfigError unless every field lies in its domain.
inline const PhySetting& validate(const PhySetting& s) {
  if (!is_valid(s)) throw ConfigError("invalid PHY setting: " + to_string(s));
  return s;
}

inline PhySetting make_setting(int channel, int psr, int prf_mhz, int data_rate_kbps,
                               double tx_gain_db) {
  PhySetting s{channel, psr, prf_mhz, data_rate_kbps, tx_gain_db};
  validate(s);
  return s;
}

/// Parses either "channel=7,psr=4096,prf=64,rate=6800,gain=10.5" or the bare
/// positional form "7,4096,64,6800,10.5" (braces allowed).
inline PhySetting parse_setting(std::string_view text) {
  std::string cleaned;
  for (char c : text)
    if (c != '{' && c != '}' && c != ' ') cleaned.push_back(c);
  std::vector<std::string> parts;
  std::stringstream ss(cleaned);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 5) throw ConfigError("setting needs 5 fields: " + std::string(text));

  static constexpr std::array<std::string_view, 5> keys{"channel", "psr", "prf", "rate", "gain"};
  std::array<double, 5> v{};
  for (std::size_t i = 0; i < 5; ++i) {
    std::string val = parts[i];
    if (auto eq = val.find('='); eq != std::string::npos) {
      if (val.substr(0, eq) != keys[i])
        throw ConfigError("expected key '" + std::string(keys[i]) + "' in setting: " +
                          std::string(text));
      val = val.substr(eq + 1);
    }
    try {
      std::size_t used = 0;
      v[i] = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw ConfigError("bad setting field '" + val + "' in: " + std::string(text));
    }
  }
  return make_setting(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                      static_cast<int>(v[3]), v[4]);
}

/// Min-max scaling of each field over its domain, in field order.
inline std::array<double, 5> encode_setting(const PhySetting& s) {
  validate(s);
  auto scale = [](double v, double lo, double hi) { return (v - lo) / (hi - lo); };
  return {scale(s.channel, 3, 7), scale(s.psr, 128, 4096), scale(s.prf_mhz, 16, 64),
          scale(s.data_rate_kbps, 110, 6800), scale(s.tx_gain_db, 0.0, 10.5)};
}

/// The 72 settings in lexicographic order over (channel, psr, prf, rate, gain).
/// Index arithmetic is mixed-radix with gain as the fastest digit.
class ActionSpace {
 public:
  static constexpr std::size_t kSize = domain::kChannels.size() * domain::kPsr.size() *
                                       domain::kPrfMhz.size() * domain::kDataRateKbps.size() *
                                       domain::kTxGainDb.size();

  ActionSpace() {
    settings_.reserve(kSize);
    for (int c : domain::kChannels)
      for (int p : domain::kPsr)
        for (int f : domain::kPrfMhz)
          for (int r : domain::kDataRateKbps)
            for (double g : domain::kTxGainDb) settings_.push_back({c, p, f, r, g});
  }

  std::size_t size() const noexcept { return settings_.size(); }
  const PhySetting& operator[](std::size_t i) const { return settings_.at(i); }
  const PhySetting& at(std::size_t i) const { return settings_.at(i); }
  auto begin() const noexcept { return settings_.begin(); }
  auto end() const noexcept { return settings_.end(); }

  std::size_t index_of(const PhySetting& s) const {
    auto c = detail::position(domain::kChannels, s.channel);
    auto p = detail::position(domain::kPsr, s.psr);
    auto f = detail::position(domain::kPrfMhz, s.prf_mhz);
    auto r = detail::position(domain::kDataRateKbps, s.data_rate_kbps);
    auto g = detail::position(domain::kTxGainDb, s.tx_gain_db);
    if (!(c && p && f && r && g)) throw ConfigError("unknown setting tuple: " + to_string(s));
    return (((*c * domain::kPsr.size() + *p) * domain::kPrfMhz.size() + *f) *
                domain::kDataRateKbps.size() +
            *r) *
               domain::kTxGainDb.size() +
           *g;
  }

 private:
  std::vector<PhySetting> settings_;
};

inline ActionSpace enumerate_actions() { return ActionSpace{}; }

/// Process-wide immutable action space.
inline const ActionSpace& action_space() {
  static const ActionSpace space;
  return space;
}

inline const PhySetting& index_to_action(std::size_t i) { return action_space().at(i); }

}  // namespace uwbadapt
