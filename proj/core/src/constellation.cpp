#include "onebit/constellation.hpp"

#include <cmath>
#include <stdexcept>

namespace onebit {

std::string to_string(Mod m) { return m == Mod::QPSK ? "qpsk" : "qam16"; }

Mod mod_from_string(const std::string& s) {
  if (s == "qpsk") return Mod::QPSK;
  if (s == "qam16" || s == "16qam") return Mod::QAM16;
  throw std::invalid_argument("unknown constellation: " + s);
}

Constellation Constellation::make(Mod kind) {
  Constellation c;
  c.kind_ = kind;
  if (kind == Mod::QPSK) {
    c.levels_ = {-1.0, +1.0};
    c.bits_per_axis_ = 1;
    // bit 0 -> +1 (index 1), bit 1 -> -1 (index 0)
    c.bits_to_index_ = {1, 0};
    c.index_to_bits_ = {1u, 0u};
  } else {
    c.levels_ = {-3.0, -1.0, +1.0, +3.0};
    c.bits_per_axis_ = 2;
    // 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    c.bits_to_index_ = {0, 1, 3, 2};
    c.index_to_bits_ = {0u, 1u, 3u, 2u};
  }
  double e = 0.0;
  for (double a : c.levels_)
    for (double b : c.levels_) e += a * a + b * b;
  c.avg_energy_ = e / static_cast<double>(c.levels_.size() * c.levels_.size());
  return c;
}

int Constellation::nearest_level_index(double x) const {
  const int n = levels_per_axis();
  int best = 0;
  double best_dist = std::abs(x - levels_[0]);
  for (int i = 1; i < n; ++i) {
    const double d = std::abs(x - levels_[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    } else if (d == best_dist) {
      const double cur = std::abs(levels_[best]);
      const double cand = std::abs(levels_[i]);
      if (cand < cur || (cand == cur && levels_[i] > levels_[best])) best = i;
    }
  }
  return best;
}

double eta_for(const Constellation& c, std::size_t k_users) {
  const double k = static_cast<double>(k_users);
  return c.kind() == Mod::QPSK ? std::sqrt(2.0 * k) : std::sqrt(10.0 * k);
}

}  // namespace onebit
