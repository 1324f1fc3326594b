#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace onebit {

enum class Mod : std::uint8_t { QPSK, QAM16 };

std::string to_string(Mod m);
Mod mod_from_string(const std::string& s);

// Lattice constellation: symbols live on the integer lattice per real axis
// (QPSK {-1,+1}, 16-QAM {-3,-1,+1,+3}), matching the breakpoints of the
// smooth training quantizer at 0 and +/-2.
//
// Gray maps, per axis:
//   QPSK   bit  0 -> +1, 1 -> -1
//   16-QAM bits 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
class Constellation {
 public:
  static Constellation make(Mod kind);
  static Constellation qpsk() { return make(Mod::QPSK); }
  static Constellation qam16() { return make(Mod::QAM16); }

  Mod kind() const { return kind_; }
  const std::vector<double>& levels() const { return levels_; }    // ascending
  int levels_per_axis() const { return static_cast<int>(levels_.size()); }
  int bits_per_axis() const { return bits_per_axis_; }
  int bits_per_symbol() const { return 2 * bits_per_axis_; }       // per complex symbol
  int order() const { return levels_per_axis() * levels_per_axis(); }  // M

  // Mean of |a+jb|^2 over all lattice pairs: 2.0 for QPSK, 10.0 for 16-QAM.
  double avg_energy() const { return avg_energy_; }

  // Gray map per axis: bit pattern <-> index into levels().
  int level_index_from_bits(unsigned bits) const { return bits_to_index_[bits]; }
  unsigned bits_from_level_index(int index) const { return index_to_bits_[index]; }
  double level_from_bits(unsigned bits) const { return levels_[bits_to_index_[bits]]; }

  // Nearest lattice level index for one real coordinate. Ties at decision
  // boundaries go to the level of smaller magnitude; the one at x == 0
  // (equal magnitudes) goes to the positive level, matching sign(0) = +1.
  int nearest_level_index(double x) const;

 private:
  Mod kind_;
  std::vector<double> levels_;
  std::vector<int> bits_to_index_;
  std::vector<unsigned> index_to_bits_;
  int bits_per_axis_ = 0;
  double avg_energy_ = 0.0;
};

// Output normalization scale: exact norm sqrt(2K) of lattice QPSK vectors,
// and root mean squared norm sqrt(10K) for 16-QAM.
double eta_for(const Constellation& c, std::size_t k_users);

}  // namespace onebit
