#pragma once
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "datamarket/rng.hpp"

namespace datamarket {

// Volumes and currency are carried as integer counts of the minimum units
// uv and uc, so every quantity in the system sits on the grid by construction.
using Volume = std::int64_t;
using Currency = std::int64_t;

enum class SurplusMode { literal, economic };
enum class FairnessMeanMode { trader_mean, volume_weighted };
enum class Role { buyer, seller, idle };

std::string_view to_string(Role r) noexcept;
std::string_view to_string(SurplusMode m) noexcept;
std::string_view to_string(FairnessMeanMode m) noexcept;

struct MarketConfig {
  // standard price of one volume unit, in currency
  double eta{1.0};
  double delta{0.2};
  double gamma{0.995};
  double alpha{0.1};
  double theta{-0.5};
  double lambda{-100.0};
  std::int64_t xi{1'000'000};

  double uv{1.0};
  double uc{1.0};

  int max_steps_per_episode{100};
  // cap on |dv| per proposal, in uv units
  Volume max_volume_per_action{3};

  SurplusMode surplus_mode{SurplusMode::economic};
  FairnessMeanMode fairness_mean_mode{FairnessMeanMode::trader_mean};

  // subscription baseline: per-period bundle size, in uv units
  Volume subscription_bundle{2};

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const MarketConfig&) const = default;
};

struct TraderState {
  Volume vt{0};
  Volume v{0};
  Currency c{0};

  bool operator==(const TraderState&) const = default;
};

struct TradeAction {
  Volume dv{0};
  Currency dc{0};

  bool is_zero() const noexcept { return dv == 0 && dc == 0; }
  bool operator==(const TradeAction&) const = default;
};

struct IntentionProfile {
  double rho{1.0};
  Role role_at_sampling{Role::idle};
};

Role role_of(const TraderState& s) noexcept;

// Reservation currency change dc_min(dv) = -rho * eta * dv, floored to the uc
// grid. Flooring keeps the value inside the role's admissible interval and
// keeps the standard-price proposal acceptable whenever it is.
// Throws std::invalid_argument if dv points against the profile's role.
Currency min_price(const IntentionProfile& profile, const MarketConfig& cfg, Volume dv);

// Trading acceptance intention: dc >= dc_min(dv). A dv whose direction does
// not match the profile's role is never accepted.
bool accepts(const IntentionProfile& profile, const MarketConfig& cfg, Volume dv, Currency dc);

// Upper bound on |dc| the enumeration considers for a given |dv|.
Currency max_price_magnitude(const MarketConfig& cfg, Volume abs_dv);

// All grid actions available to the trader, dv ascending then dc ascending.
std::vector<TradeAction> feasible_actions(const TraderState& s, const MarketConfig& cfg);
std::size_t feasible_action_count(const TraderState& s, const MarketConfig& cfg);
bool is_feasible(const TradeAction& a, const TraderState& s, const MarketConfig& cfg);

// Draws one rho per trader from the role's interval; idle traders get rho = 1.
std::vector<IntentionProfile> sample_intentions(Rng& rng, const MarketConfig& cfg,
                                                std::span<const TraderState> states);

inline double to_currency(Currency c, const MarketConfig& cfg) { return static_cast<double>(c) * cfg.uc; }
inline double to_volume(Volume v, const MarketConfig& cfg) { return static_cast<double>(v) * cfg.uv; }

} // namespace datamarket
