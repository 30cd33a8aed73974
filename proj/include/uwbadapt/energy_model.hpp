#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "phy_actions.hpp"

namespace uwbadapt {

/// DW1000 current draw for one (channel, PRF, data rate) mode, in mA.
struct RadioCurrents {
  int channel;
  int prf_mhz;
  int data_rate_kbps;
  double preamble_tx_ma;
  double preamble_rx_ma;
  double data_tx_ma;
  double data_rx_ma;
};

class RadioCurrentTable {
 public:
  explicit RadioCurrentTable(std::vector<RadioCurrents> rows) : rows_(std::move(rows)) {}

  /// Datasheet currents for the 12 modes covered by the action space.
  static const RadioCurrentTable& dw1000() {
    static const RadioCurrentTable table({
        {3, 16, 110, 68, 113, 35, 59},   {3, 16, 6800, 68, 113, 50, 118},
        {3, 64, 110, 83, 113, 40, 72},   {3, 64, 6800, 83, 113, 52, 118},
        {5, 16, 110, 74, 118, 42, 62},   {5, 16, 6800, 74, 118, 57, 123},
        {5, 64, 110, 89, 118, 46, 75},   {5, 64, 6800, 89, 118, 59, 123},
        {7, 16, 110, 74, 118, 42, 62},   {7, 16, 6800, 74, 118, 57, 123},
        {7, 64, 110, 95, 124, 52, 81},   {7, 64, 6800, 95, 124, 65, 129},
    });
    return table;
  }

  const RadioCurrents& lookup(int channel, int prf_mhz, int data_rate_kbps) const {
    for (const auto& r : rows_)
      if (r.channel == channel && r.prf_mhz == prf_mhz && r.data_rate_kbps == data_rate_kbps)
        return r;
    throw ConfigError("no current table row for channel " + std::to_string(channel) + ", PRF " +
                      std::to_string(prf_mhz) + ", rate " + std::to_string(data_rate_kbps));
  }

  const std::vector<RadioCurrents>& rows() const noexcept { return rows_; }

 private:
  std::vector<RadioCurrents> rows_;
};

/// Symbol durations per (PRF, data rate), in ns.
struct SymbolDurations {
  int prf_mhz;
  int data_rate_kbps;
  double shr_symbol_ns;
  double data_symbol_ns;
};

class SymbolDurationTable {
 public:
  explicit SymbolDurationTable(std::vector<SymbolDurations> rows) : rows_(std::move(rows)) {}

  static const SymbolDurationTable& dw1000() {
    static const SymbolDurationTable table({
        {16, 110, 993.59, 8205.13},
        {16, 6800, 993.59, 1025.64},
        {64, 110, 1017.63, 8205.13},
        {64, 6800, 1017.63, 128.12},
    });
    return table;
  }

  const SymbolDurations& lookup(int prf_mhz, int data_rate_kbps) const {
    for (const auto& r : rows_)
      if (r.prf_mhz == prf_mhz && r.data_rate_kbps == data_rate_kbps) return r;
    throw ConfigError("no symbol duration row for PRF " + std::to_string(prf_mhz) + ", rate " +
                      std::to_string(data_rate_kbps));
  }

  const std::vector<SymbolDurations>& rows() const noexcept { return rows_; }

 private:
  std::vector<SymbolDurations> rows_;
};

/// Frame layout constants.
struct FrameModelParams {
  double phr_bits = 19;
  double payload_bytes = 12;
  double fec_rate = 0.87;
  double supply_v = 3.3;
  int sfd_symbols_110k = 64;
  int sfd_symbols_other = 8;
  /// Sends the PHR of 6.8 Mbps frames at the 850 kbps-class symbol duration
  /// (1025.64 ns) instead of the payload symbol duration.
  bool phr_at_base_rate = false;

  void validate() const {
    if (!(fec_rate > 0 && fec_rate <= 1)) throw ConfigError("fec_rate must lie in (0, 1]");
    if (!(phr_bits > 0 && payload_bytes > 0 && supply_v > 0 && sfd_symbols_110k > 0 &&
          sfd_symbols_other > 0))
      throw ConfigError("frame model counts must be positive");
  }
};

enum class Direction { Tx, Rx };

struct FrameDurations {
  double t_preamble_us;
  double t_data_us;
};

/// Supply power for a current draw: P = V * I. Input mA, output W.
inline double power_w(double current_ma, double supply_v = 3.3) {
  if (current_ma < 0) throw ConfigError("current must be non-negative");
  return supply_v * current_ma * 1e-3;
}

inline double preamble_symbols(const PhySetting& s, const FrameModelParams& p = {}) {
  const int sfd = s.data_rate_kbps == 110 ? p.sfd_symbols_110k : p.sfd_symbols_other;
  return s.psr + sfd;
}

inline double data_symbols(const FrameModelParams& p = {}) {
  return p.phr_bits + p.payload_bytes * 8.0 / p.fec_rate;
}

inline FrameDurations frame_durations(const PhySetting& s, const FrameModelParams& p = {},
                                      const SymbolDurationTable& sym = SymbolDurationTable::dw1000()) {
  validate(s);
  p.validate();
  const auto& row = sym.lookup(s.prf_mhz, s.data_rate_kbps);
  FrameDurations d{};
  d.t_preamble_us = preamble_symbols(s, p) * row.shr_symbol_ns * 1e-3;
  if (p.phr_at_base_rate && s.data_rate_kbps != 110) {
    const double phr_ns = 1025.64;
    d.t_data_us = (p.phr_bits * phr_ns + p.payload_bytes * 8.0 / p.fec_rate * row.data_symbol_ns) * 1e-3;
  } else {
    d.t_data_us = data_symbols(p) * row.data_symbol_ns * 1e-3;
  }
  return d;
}

/// Energy of a single frame in W*us: preamble power times preamble duration
/// plus data power times data duration.
inline double frame_energy(const PhySetting& s, Direction dir, const FrameModelParams& p = {},
                           const RadioCurrentTable& currents = RadioCurrentTable::dw1000(),
                           const SymbolDurationTable& sym = SymbolDurationTable::dw1000()) {
  const auto d = frame_durations(s, p, sym);
  const auto& c = currents.lookup(s.channel, s.prf_mhz, s.data_rate_kbps);
  const double i_pre = dir == Direction::Tx ? c.preamble_tx_ma : c.preamble_rx_ma;
  const double i_data = dir == Direction::Tx ? c.data_tx_ma : c.data_rx_ma;
  return power_w(i_pre, p.supply_v) * d.t_preamble_us + power_w(i_data, p.supply_v) * d.t_data_us;
}

/// Energy for one two-way range (three frames each direction), W*us.
/// The TX term carries the transmit gain as a linear factor.
inline double range_energy(const PhySetting& s, const FrameModelParams& p = {},
                           const RadioCurrentTable& currents = RadioCurrentTable::dw1000(),
                           const SymbolDurationTable& sym = SymbolDurationTable::dw1000()) {
  const double rx = frame_energy(s, Direction::Rx, p, currents, sym);
  const double tx = frame_energy(s, Direction::Tx, p, currents, sym);
  return 3.0 * (rx + tx * std::pow(10.0, s.tx_gain_db / 10.0));
}

/// Per-action range energies with min-max normalization over the space.
class EnergyTable {
 public:
  explicit EnergyTable(const ActionSpace& space = action_space(), const FrameModelParams& p = {})
      : params_(p) {
    if (space.size() == 0) throw ConfigError("empty action space");
    energies_.reserve(space.size());
    for (const auto& s : space) energies_.push_back(range_energy(s, p));
    min_ = *std::min_element(energies_.begin(), energies_.end());
    max_ = *std::max_element(energies_.begin(), energies_.end());
    if (!(max_ > min_)) throw ConfigError("degenerate action space: all energies equal");
  }

  std::size_t size() const noexcept { return energies_.size(); }
  double energy(std::size_t action) const { return energies_.at(action); }
  double normalized(std::size_t action) const { return (energies_.at(action) - min_) / (max_ - min_); }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  std::size_t argmin() const {
    return static_cast<std::size_t>(std::min_element(energies_.begin(), energies_.end()) - energies_.begin());
  }
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(energies_.begin(), energies_.end()) - energies_.begin());
  }
  const FrameModelParams& params() const noexcept { return params_; }

 private:
  FrameModelParams params_;
  std::vector<double> energies_;
  double min_ = 0;
  double max_ = 0;
};

/// (E(s) - min E) / (max E - min E) over all settings of the space.
inline double normalized_energy(const PhySetting& s, const ActionSpace& space = action_space(),
                                const FrameModelParams& p = {}) {
  EnergyTable table(space, p);
  return table.normalized(space.index_of(s));
}

}  // namespace uwbadapt
