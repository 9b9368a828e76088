#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcb {

/// Element of GF(2^p), p <= 16. Stored in the low p bits.
using FieldSymbol = std::uint16_t;

/// Arithmetic over GF(2^p) using log/antilog tables.
///
/// Tables are built once per p and shared; instances are immutable and safe
/// to use from any thread. Obtain one through GaloisField::get(p).
class GaloisField {
 public:
  static constexpr unsigned kMaxBits = 16;

  /// Conventional reduction polynomials (bit i = coefficient of x^i).
  /// p = 8 uses the AES polynomial x^8+x^4+x^3+x+1, which is irreducible but
  /// not primitive; the log tables are then built on generator 0x03.
  static constexpr std::array<std::uint32_t, kMaxBits + 1> kPolynomials = {
      0x0,     0x3,    0x7,    0xB,    0x13,   0x25,   0x43,   0x89,  0x11B,
      0x211,   0x409,  0x805,  0x1053, 0x201B, 0x4443, 0x8003, 0x1100B};

  static const GaloisField& get(unsigned bits) {
    if (bits < 1 || bits > kMaxBits) {
      throw std::invalid_argument("GF(2^p): p must be in [1, 16], got " + std::to_string(bits));
    }
    static std::array<std::unique_ptr<GaloisField>, kMaxBits + 1> cache;
    static std::array<std::once_flag, kMaxBits + 1> once;
    std::call_once(once[bits], [bits] { cache[bits].reset(new GaloisField(bits)); });
    return *cache[bits];
  }

  unsigned bits() const { return bits_; }
  std::uint32_t order() const { return order_; }  // 2^p
  std::uint32_t polynomial() const { return kPolynomials[bits_]; }
  FieldSymbol generator() const { return generator_; }

  bool contains(std::uint32_t v) const { return v < order_; }

  static FieldSymbol add(FieldSymbol a, FieldSymbol b) { return a ^ b; }
  static FieldSymbol sub(FieldSymbol a, FieldSymbol b) { return a ^ b; }

  FieldSymbol mul(FieldSymbol a, FieldSymbol b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
  }

  FieldSymbol inv(FieldSymbol a) const {
    if (a == 0) throw std::domain_error("GF(2^p): inverse of zero");
    return exp_[(order_ - 1) - log_[a]];
  }

  FieldSymbol div(FieldSymbol a, FieldSymbol b) const {
    if (b == 0) throw std::domain_error("GF(2^p): division by zero");
    if (a == 0) return 0;
    return exp_[log_[a] + (order_ - 1) - log_[b]];
  }

  FieldSymbol pow(FieldSymbol a, std::uint64_t e) const {
    if (e == 0) return 1;
    if (a == 0) return 0;
    return exp_[static_cast<std::uint32_t>((static_cast<std::uint64_t>(log_[a]) * e) % (order_ - 1))];
  }

  /// dst[i] ^= c * src[i]
  void axpy(FieldSymbol c, const FieldSymbol* src, FieldSymbol* dst, std::size_t len) const {
    if (c == 0) return;
    if (c == 1) {
      for (std::size_t i = 0; i < len; ++i) dst[i] ^= src[i];
      return;
    }
    const std::uint32_t lc = log_[c];
    for (std::size_t i = 0; i < len; ++i) {
      if (src[i] != 0) dst[i] ^= exp_[lc + log_[src[i]]];
    }
  }

  /// buf[i] = c * buf[i]
  void scale(FieldSymbol c, FieldSymbol* buf, std::size_t len) const {
    if (c == 1) return;
    if (c == 0) {
      for (std::size_t i = 0; i < len; ++i) buf[i] = 0;
      return;
    }
    const std::uint32_t lc = log_[c];
    for (std::size_t i = 0; i < len; ++i) {
      if (buf[i] != 0) buf[i] = exp_[lc + log_[buf[i]]];
    }
  }

 private:
  explicit GaloisField(unsigned bits) : bits_(bits), order_(1u << bits) {
    if (order_ == 2) {
      generator_ = 1;
      exp_.assign(2, 1);
      log_.assign(2, 0);
      return;
    }
    // Smallest generator of the multiplicative group.
    for (std::uint32_t g = 2; g < order_; ++g) {
      if (try_build(static_cast<FieldSymbol>(g), kPolynomials[bits])) {
        generator_ = static_cast<FieldSymbol>(g);
        return;
      }
    }
    throw std::logic_error("GF(2^p): no generator found for polynomial");
  }

  // Carry-less multiply with reduction; used only while building tables.
  static std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b, std::uint32_t poly, unsigned bits) {
    std::uint32_t r = 0;
    while (b) {
      if (b & 1u) r ^= a;
      b >>= 1;
      a <<= 1;
      if (a & (1u << bits)) a ^= poly;
    }
    return r;
  }

  bool try_build(FieldSymbol g, std::uint32_t poly) {
    const std::uint32_t q1 = order_ - 1;
    exp_.assign(2 * q1, 0);
    log_.assign(order_, 0);
    std::uint32_t x = 1;
    for (std::uint32_t i = 0; i < q1; ++i) {
      if (i > 0 && x == 1) return false;  // order of g smaller than q-1
      exp_[i] = static_cast<FieldSymbol>(x);
      log_[x] = i;
      x = slow_mul(x, g, poly, bits_);
    }
    if (x != 1) return false;
    for (std::uint32_t i = q1; i < 2 * q1; ++i) exp_[i] = exp_[i - q1];
    return true;
  }

  unsigned bits_;
  std::uint32_t order_;
  FieldSymbol generator_ = 0;
  std::vector<FieldSymbol> exp_;
  std::vector<std::uint32_t> log_;
};

}  // namespace rcb
