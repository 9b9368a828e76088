#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rcb/galois_field.hpp"

namespace rcb {

/// One column of a group matrix: the s field symbols of an original,
/// intermediate or coded block.
class BlockVector {
 public:
  BlockVector() = default;
  explicit BlockVector(std::size_t symbols) : symbols_(symbols, 0) {}
  explicit BlockVector(std::vector<FieldSymbol> symbols) : symbols_(std::move(symbols)) {}

  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }

  FieldSymbol operator[](std::size_t i) const { return symbols_[i]; }
  FieldSymbol& operator[](std::size_t i) { return symbols_[i]; }

  std::span<const FieldSymbol> symbols() const { return symbols_; }
  std::span<FieldSymbol> symbols() { return symbols_; }
  FieldSymbol* data() { return symbols_.data(); }
  const FieldSymbol* data() const { return symbols_.data(); }

  bool is_zero() const {
    for (FieldSymbol s : symbols_)
      if (s != 0) return false;
    return true;
  }

  BlockVector& operator^=(const BlockVector& other) {
    if (other.size() != size()) throw std::invalid_argument("BlockVector: length mismatch");
    for (std::size_t i = 0; i < symbols_.size(); ++i) symbols_[i] ^= other.symbols_[i];
    return *this;
  }

  friend BlockVector operator^(BlockVector a, const BlockVector& b) { return a ^= b; }
  friend bool operator==(const BlockVector&, const BlockVector&) = default;

 private:
  std::vector<FieldSymbol> symbols_;
};

/// Payload stand-in for structure-only simulation: coded blocks keep their
/// neighbour sets but carry no symbols. Decodability of a raptor group depends
/// only on the neighbour structure, so Monte Carlo sizing runs on this.
struct MetadataOnly {
  friend bool operator==(const MetadataOnly&, const MetadataOnly&) = default;
};

inline void xor_into(BlockVector& dst, const BlockVector& src) { dst ^= src; }
inline void xor_into(MetadataOnly&, const MetadataOnly&) {}

template <class P>
inline constexpr bool kCarriesSymbols = std::is_same_v<P, BlockVector>;

/// Bytes used to serialize one symbol of GF(2^p).
inline std::size_t symbol_bytes(unsigned field_bits) { return (field_bits + 7) / 8; }

inline void append_symbol_le(std::vector<std::uint8_t>& out, FieldSymbol v, unsigned field_bits) {
  for (std::size_t b = 0; b < symbol_bytes(field_bits); ++b) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
}

inline std::vector<std::uint8_t> serialize(const BlockVector& block, unsigned field_bits) {
  std::vector<std::uint8_t> out;
  out.reserve(block.size() * symbol_bytes(field_bits));
  for (FieldSymbol s : block.symbols()) append_symbol_le(out, s, field_bits);
  return out;
}

}  // namespace rcb
