#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcb/block_vector.hpp"
#include "rcb/galois_field.hpp"

namespace rcb {

/// Intermediate (pre-coded) block index, 0-based: 0..n-1. Indices below k are
/// the systematic positions that equal the original blocks.
using Index = std::uint32_t;

class FieldTooSmall : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientSymbols : public std::runtime_error {
 public:
  InsufficientSymbols(std::size_t have, std::size_t need)
      : std::runtime_error("pre-code decode: " + std::to_string(have) + " intermediates available, " +
                           std::to_string(need) + " required"),
        available(have),
        required(need) {}
  std::size_t available;
  std::size_t required;
};

struct CodecConfig {
  unsigned field_bits = 16;
  std::size_t symbols = 1;     // s
  double precode_rate = 0.8;   // k/n

  /// s = ceil(block_bytes / bytes-per-symbol)
  static CodecConfig from_block_bytes(std::uint64_t block_bytes, unsigned field_bits, double precode_rate) {
    CodecConfig cfg;
    cfg.field_bits = field_bits;
    cfg.precode_rate = precode_rate;
    const std::uint64_t per = symbol_bytes(field_bits);
    cfg.symbols = static_cast<std::size_t>((block_bytes + per - 1) / per);
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (field_bits < 1 || field_bits > GaloisField::kMaxBits)
      throw std::invalid_argument("codec: field_bits must be in [1, 16]");
    if (symbols < 1) throw std::invalid_argument("codec: symbols per block must be >= 1");
    if (!(precode_rate > 0.0 && precode_rate <= 1.0))
      throw std::invalid_argument("codec: precode_rate must be in (0, 1]");
  }

  /// n = round(k / r)
  std::uint32_t code_length(std::uint32_t k) const {
    return static_cast<std::uint32_t>(std::lround(static_cast<double>(k) / precode_rate));
  }

  std::uint64_t block_bytes() const { return symbols * symbol_bytes(field_bits); }
};

/// Systematic k x n generator [I_k | parity]. Only the parity part is stored.
struct GeneratorMatrix {
  std::uint32_t k = 0;
  std::uint32_t n = 0;
  unsigned field_bits = 16;
  std::vector<FieldSymbol> parity;  // k rows of (n - k), row-major

  std::uint32_t parity_columns() const { return n - k; }

  FieldSymbol parity_at(std::uint32_t row, std::uint32_t col) const {
    return parity[static_cast<std::size_t>(row) * (n - k) + col];
  }

  /// Entry of the full k x n matrix.
  FieldSymbol at(std::uint32_t row, std::uint32_t col) const {
    if (col < k) return row == col ? 1 : 0;
    return parity_at(row, col - k);
  }

  friend bool operator==(const GeneratorMatrix&, const GeneratorMatrix&) = default;
};

/// Reed-Solomon generator over the evaluation points 0, 1, ..., n-1, reduced
/// to systematic form. The reduced parity entries are the Lagrange basis
/// polynomials of the first k points evaluated at the remaining points,
///
///   parity[i][j] = prod_{l != i} (x_{k+j} - x_l) / (x_i - x_l),
///
/// which is exactly what Gaussian elimination on the Vandermonde matrix
/// yields, computed in O(k^2 + k(n-k)).
inline GeneratorMatrix build_systematic_generator(std::uint32_t k, std::uint32_t n, unsigned field_bits) {
  const GaloisField& gf = GaloisField::get(field_bits);
  if (k == 0 || k > n) throw std::invalid_argument("generator: need 1 <= k <= n");
  if (n > gf.order() - 1) {
    throw FieldTooSmall("generator: n = " + std::to_string(n) + " exceeds 2^p - 1 = " +
                        std::to_string(gf.order() - 1));
  }
  GeneratorMatrix g;
  g.k = k;
  g.n = n;
  g.field_bits = field_bits;
  const std::uint32_t m = n - k;
  g.parity.assign(static_cast<std::size_t>(k) * m, 0);
  if (m == 0) return g;

  auto point = [](std::uint32_t i) { return static_cast<FieldSymbol>(i); };

  // Barycentric weights w_i = 1 / prod_{l != i} (x_i - x_l).
  std::vector<FieldSymbol> weight(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    FieldSymbol d = 1;
    for (std::uint32_t l = 0; l < k; ++l) {
      if (l != i) d = gf.mul(d, GaloisField::sub(point(i), point(l)));
    }
    weight[i] = gf.inv(d);
  }
  for (std::uint32_t j = 0; j < m; ++j) {
    const FieldSymbol y = point(k + j);
    FieldSymbol full = 1;
    for (std::uint32_t l = 0; l < k; ++l) full = gf.mul(full, GaloisField::sub(y, point(l)));
    for (std::uint32_t i = 0; i < k; ++i) {
      const FieldSymbol num = gf.div(full, GaloisField::sub(y, point(i)));
      g.parity[static_cast<std::size_t>(i) * m + j] = gf.mul(num, weight[i]);
    }
  }
  return g;
}

/// k, n, p as u32 LE, then parity symbols row-major, ceil(p/8) bytes LE each.
inline std::vector<std::uint8_t> serialize(const GeneratorMatrix& g) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + g.parity.size() * symbol_bytes(g.field_bits));
  auto put_u32 = [&out](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  };
  put_u32(g.k);
  put_u32(g.n);
  put_u32(g.field_bits);
  for (FieldSymbol s : g.parity) append_symbol_le(out, s, g.field_bits);
  return out;
}

/// Parity intermediate column `col` (0-based among the n - k parity columns).
inline BlockVector encode_parity_column(const std::vector<BlockVector>& originals, const GeneratorMatrix& g,
                                        std::uint32_t col) {
  const GaloisField& gf = GaloisField::get(g.field_bits);
  const std::size_t s = originals.front().size();
  BlockVector out(s);
  for (std::uint32_t i = 0; i < g.k; ++i) {
    gf.axpy(g.parity_at(i, col), originals[i].data(), out.data(), s);
  }
  return out;
}

/// Row-wise product [b_1 .. b_k] * G for every one of the s rows. The first k
/// outputs are copies of the inputs.
inline std::vector<BlockVector> precode_encode(const std::vector<BlockVector>& originals, const GeneratorMatrix& g) {
  if (originals.size() != g.k) {
    throw ShapeError("precode_encode: expected " + std::to_string(g.k) + " blocks, got " +
                     std::to_string(originals.size()));
  }
  const std::size_t s = originals.front().size();
  for (const auto& b : originals) {
    if (b.size() != s) throw ShapeError("precode_encode: blocks differ in length");
  }
  std::vector<BlockVector> out(originals.begin(), originals.end());
  out.reserve(g.n);
  for (std::uint32_t j = 0; j < g.parity_columns(); ++j) out.push_back(encode_parity_column(originals, g, j));
  return out;
}

/// Erasure decoding from any k distinct intermediates. Missing systematic
/// blocks are solved from as many available parity columns via Gauss-Jordan
/// on the corresponding square submatrix of the parity part.
inline std::vector<BlockVector> precode_decode(const std::map<Index, BlockVector>& available, const GeneratorMatrix& g) {
  std::size_t in_range = 0;
  for (const auto& [idx, _] : available)
    if (idx < g.n) ++in_range;
  if (in_range < g.k) throw InsufficientSymbols(in_range, g.k);

  const std::size_t s = available.begin()->second.size();
  for (const auto& [idx, b] : available) {
    if (b.size() != s) throw ShapeError("precode_decode: blocks differ in length");
  }

  std::vector<BlockVector> out(g.k);
  std::vector<Index> missing;
  for (Index i = 0; i < g.k; ++i) {
    auto it = available.find(i);
    if (it != available.end()) {
      out[i] = it->second;
    } else {
      missing.push_back(i);
    }
  }
  if (missing.empty()) return out;

  const GaloisField& gf = GaloisField::get(g.field_bits);
  const std::size_t m = missing.size();

  std::vector<std::uint32_t> cols;  // parity column numbers used
  for (auto it = available.lower_bound(g.k); it != available.end() && cols.size() < m; ++it) {
    if (it->first < g.n) cols.push_back(it->first - g.k);
  }

  // Right-hand sides: u_j minus the contribution of the known originals.
  std::vector<BlockVector> rhs;
  rhs.reserve(m);
  std::vector<char> known(g.k, 1);
  for (Index i : missing) known[i] = 0;
  for (std::uint32_t c : cols) {
    BlockVector r = available.at(g.k + c);
    for (Index i = 0; i < g.k; ++i) {
      if (known[i]) gf.axpy(g.parity_at(i, c), out[i].data(), r.data(), s);
    }
    rhs.push_back(std::move(r));
  }

  // a[row][col] = parity[missing[col]][cols[row]]
  std::vector<FieldSymbol> a(m * m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) a[r * m + c] = g.parity_at(missing[c], cols[r]);

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    while (pivot < m && a[pivot * m + col] == 0) ++pivot;
    if (pivot == m) throw std::logic_error("precode_decode: singular system from an MDS generator");
    if (pivot != col) {
      for (std::size_t c = 0; c < m; ++c) std::swap(a[pivot * m + c], a[col * m + c]);
      std::swap(rhs[pivot], rhs[col]);
    }
    const FieldSymbol inv = gf.inv(a[col * m + col]);
    gf.scale(inv, &a[col * m], m);
    gf.scale(inv, rhs[col].data(), s);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const FieldSymbol f = a[r * m + col];
      if (f == 0) continue;
      gf.axpy(f, &a[col * m], &a[r * m], m);
      gf.axpy(f, rhs[col].data(), rhs[r].data(), s);
    }
  }
  for (std::size_t c = 0; c < m; ++c) out[missing[c]] = std::move(rhs[c]);
  return out;
}

}  // namespace rcb
