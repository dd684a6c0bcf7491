// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

/// Model checkpoint format:
///   6 bytes   magic "NSDPP1"
///   3 x u64   M, D, D' (little-endian)
///   f64[]     V, B, C, each row-major (little-endian IEEE-754)

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "nsdpp/kernel.hpp"

namespace nsdpp {

inline constexpr std::array<char, 6> kCheckpointMagic{'N', 'S', 'D', 'P', 'P', '1'};

namespace detail {

inline void put_u64(std::ostream &out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k)
    b[k] = static_cast<char>((v >> (8 * k)) & 0xFFu);
  out.write(b.data(), b.size());
}

inline std::uint64_t get_u64(std::istream &in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char *>(b.data()), b.size());
  if (!in)
    throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k)
    v = (v << 8) | b[k];
  return v;
}

inline void put_matrix(std::ostream &out, const Matrix &m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
}

inline Matrix get_matrix(std::istream &in, std::uint64_t rows, std::uint64_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = std::bit_cast<double>(get_u64(in));
  return m;
}

} // namespace detail

inline void write_checkpoint(const LowRankParams &p, std::ostream &out) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_u64(out, p.size());
  detail::put_u64(out, p.rank_sym());
  detail::put_u64(out, p.rank_nonsym());
  detail::put_matrix(out, p.V());
  detail::put_matrix(out, p.B());
  detail::put_matrix(out, p.C());
}

inline LowRankParams read_checkpoint(std::istream &in) {
  std::array<char, 6> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic)
    throw DataError("not an NSDPP1 checkpoint");
  const auto m = detail::get_u64(in);
  const auto d = detail::get_u64(in);
  const auto dp = detail::get_u64(in);
  constexpr std::uint64_t limit = std::uint64_t{1} << 32;
  if (m == 0 || d == 0 || m >= limit || d >= limit || dp >= limit)
    throw DataError("checkpoint header has implausible dimensions");
  Matrix v = detail::get_matrix(in, m, d);
  Matrix b = detail::get_matrix(in, m, dp);
  Matrix c = detail::get_matrix(in, m, dp);
  return {std::move(v), std::move(b), std::move(c)};
}

inline void write_checkpoint(const LowRankParams &p, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write checkpoint '" + path + "'");
  write_checkpoint(p, out);
}

inline LowRankParams read_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

} // namespace nsdpp
