#include "datamarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace datamarket {

namespace {

constexpr double kGridEps = 1e-9;

// Grid conversion tolerant of representation error in products like 0.9*4/0.1.
Currency floor_to_grid(double units) { return static_cast<Currency>(std::floor(units + kGridEps)); }
Currency ceil_to_grid(double units) { return static_cast<Currency>(std::ceil(units - kGridEps)); }

[[noreturn]] void bad_field(const char* field, const std::string& why) {
  throw std::invalid_argument(std::string{"MarketConfig."} + field + ": " + why);
}

} // namespace

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::buyer: return "buyer";
    case Role::seller: return "seller";
    case Role::idle: return "idle";
  }
  return "idle";
}

std::string_view to_string(SurplusMode m) noexcept {
  return m == SurplusMode::literal ? "literal" : "economic";
}

std::string_view to_string(FairnessMeanMode m) noexcept {
  return m == FairnessMeanMode::trader_mean ? "trader_mean" : "volume_weighted";
}

void MarketConfig::validate() const {
  if (!(std::isfinite(eta) && eta > 0)) bad_field("eta", "must be positive");
  if (!(delta > 0 && delta < 1)) bad_field("delta", "must lie strictly inside (0,1)");
  if (!(gamma >= 0 && gamma < 1)) bad_field("gamma", "must lie in [0,1)");
  if (!(alpha >= 0 && alpha <= 1)) bad_field("alpha", "must lie in [0,1]");
  if (!std::isfinite(theta)) bad_field("theta", "must be finite");
  if (!std::isfinite(lambda)) bad_field("lambda", "must be finite");
  if (xi < 0) bad_field("xi", "must be non-negative");
  if (!(std::isfinite(uv) && uv > 0)) bad_field("uv", "must be positive");
  if (!(std::isfinite(uc) && uc > 0)) bad_field("uc", "must be positive");
  if (max_steps_per_episode <= 0) bad_field("max_steps_per_episode", "must be positive");
  if (max_volume_per_action < 1) bad_field("max_volume_per_action", "must be at least one uv");
  if (subscription_bundle < 1) bad_field("subscription_bundle", "must be at least one uv");
}

Role role_of(const TraderState& s) noexcept {
  if (s.v < s.vt) return Role::buyer;
  if (s.v > s.vt) return Role::seller;
  return Role::idle;
}

Currency min_price(const IntentionProfile& profile, const MarketConfig& cfg, Volume dv) {
  if (dv == 0) return 0;
  const bool ok = (dv > 0 && profile.role_at_sampling == Role::buyer) ||
                  (dv < 0 && profile.role_at_sampling == Role::seller);
  if (!ok) {
    throw std::invalid_argument("min_price: dv=" + std::to_string(dv) + " contradicts role " +
                                std::string{to_string(profile.role_at_sampling)});
  }
  const double real = -profile.rho * cfg.eta * to_volume(dv, cfg);
  return floor_to_grid(real / cfg.uc);
}

bool accepts(const IntentionProfile& profile, const MarketConfig& cfg, Volume dv, Currency dc) {
  if (dv == 0) return dc >= 0;
  if (dv > 0 && profile.role_at_sampling != Role::buyer) return false;
  if (dv < 0 && profile.role_at_sampling != Role::seller) return false;
  return dc >= min_price(profile, cfg, dv);
}

Currency max_price_magnitude(const MarketConfig& cfg, Volume abs_dv) {
  return ceil_to_grid((1.0 + cfg.delta) * cfg.eta * to_volume(abs_dv, cfg) / cfg.uc);
}

std::vector<TradeAction> feasible_actions(const TraderState& s, const MarketConfig& cfg) {
  std::vector<TradeAction> out;
  switch (role_of(s)) {
    case Role::idle:
      out.push_back({0, 0});
      break;
    case Role::buyer: {
      out.push_back({0, 0});
      const Volume top = std::min(s.vt - s.v, cfg.max_volume_per_action);
      for (Volume dv = 1; dv <= top; ++dv) {
        const Currency lo = -std::min(s.c, max_price_magnitude(cfg, dv));
        for (Currency dc = lo; dc <= 0; ++dc) out.push_back({dv, dc});
      }
      break;
    }
    case Role::seller: {
      const Volume top = std::min(s.v - s.vt, cfg.max_volume_per_action);
      for (Volume dv = -top; dv <= -1; ++dv) {
        const Currency hi = max_price_magnitude(cfg, -dv);
        for (Currency dc = 0; dc <= hi; ++dc) out.push_back({dv, dc});
      }
      out.push_back({0, 0});
      break;
    }
  }
  return out;
}

std::size_t feasible_action_count(const TraderState& s, const MarketConfig& cfg) {
  std::size_t n = 1;
  switch (role_of(s)) {
    case Role::idle:
      break;
    case Role::buyer: {
      const Volume top = std::min(s.vt - s.v, cfg.max_volume_per_action);
      for (Volume dv = 1; dv <= top; ++dv)
        n += static_cast<std::size_t>(std::min(s.c, max_price_magnitude(cfg, dv))) + 1;
      break;
    }
    case Role::seller: {
      const Volume top = std::min(s.v - s.vt, cfg.max_volume_per_action);
      for (Volume dv = 1; dv <= top; ++dv) n += static_cast<std::size_t>(max_price_magnitude(cfg, dv)) + 1;
      break;
    }
  }
  return n;
}

bool is_feasible(const TradeAction& a, const TraderState& s, const MarketConfig& cfg) {
  if (a.dv == 0) return a.dc == 0;
  switch (role_of(s)) {
    case Role::idle:
      return false;
    case Role::buyer:
      return a.dv > 0 && a.dv <= std::min(s.vt - s.v, cfg.max_volume_per_action) && a.dc <= 0 &&
             a.dc >= -std::min(s.c, max_price_magnitude(cfg, a.dv));
    case Role::seller:
      return a.dv < 0 && -a.dv <= std::min(s.v - s.vt, cfg.max_volume_per_action) && a.dc >= 0 &&
             a.dc <= max_price_magnitude(cfg, -a.dv);
  }
  return false;
}

std::vector<IntentionProfile> sample_intentions(Rng& rng, const MarketConfig& cfg,
                                                std::span<const TraderState> states) {
  std::vector<IntentionProfile> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    const Role role = role_of(s);
    IntentionProfile p{1.0, role};
    if (role == Role::buyer) {
      p.rho = std::uniform_real_distribution<double>(1.0 - cfg.delta, 1.0)(rng);
    } else if (role == Role::seller) {
      p.rho = std::uniform_real_distribution<double>(1.0, 1.0 + cfg.delta)(rng);
    }
    out.push_back(p);
  }
  return out;
}

} // namespace datamarket
