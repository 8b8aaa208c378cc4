#pragma once

#include "bdsde/brownian.hpp"
#include "bdsde/spde.hpp"

#include <string>

namespace bdsde {

// Binary path dump, little-endian throughout:
//   magic "BDSDEPTH", then u64 fields version=1, seed_w, seed_b, N, M, d, l,
//   then f64 t0, T, then dW as M rows of N×d f64 (path-major), then dB as
//   N rows of l f64. Loading yields a bundle with from_file set whose
//   increments reproduce the dumped ones exactly.
void dump_paths(const std::string& path, const BrownianBundle& bundle);
BrownianBundle load_paths(const std::string& path);

// Field dumps: CSV rows (t, x, u, ux) over all nodes, and a compact binary
// form (magic "BDSDEFLD", u64 version=1, b_seed, N, J, f64 t0, T, x_min,
// x_max, then the u, ux, uxx arrays row-major) that round-trips bit-for-bit.
void write_field_csv(const std::string& path, const RandomFieldU& field);
void write_field_bin(const std::string& path, const RandomFieldU& field);
RandomFieldU read_field_bin(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace bdsde
