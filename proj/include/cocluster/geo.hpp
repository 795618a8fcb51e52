#pragma once

#include <cmath>

namespace cocluster {

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in kilometers.
inline double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  constexpr double deg = M_PI / 180.0;
  const double dlat = (b.lat_deg - a.lat_deg) * deg;
  const double dlon = (b.lon_deg - a.lon_deg) * deg;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat_deg * deg) * std::cos(b.lat_deg * deg) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace cocluster
