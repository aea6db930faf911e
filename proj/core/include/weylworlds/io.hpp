#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "weylworlds/ensemble.hpp"
#include "weylworlds/oracle.hpp"

namespace weylworlds {

// Binary grid file:
//   "WWF1", u32 0x01020304 (byte-order tag), u32 n,
//   n x u64 counts, n x f64 mins, n x f64 spacings,
//   n x u8 periodic flags padded to a multiple of 8 bytes,
//   f64 t, f64 hbar, n x f64 metric diagonal,
//   then (re, im) f64 pairs in row-major order.
// Files written on a machine of the other byte order are swapped on read.
void write_wavefunction(const std::filesystem::path& path, const WaveFunction& psi);
void write_wavefunction(std::ostream& out, const WaveFunction& psi);
WaveFunction read_wavefunction(const std::filesystem::path& path);
WaveFunction read_wavefunction(std::istream& in);

// CSV with header t,world_index,x0..,q0..,v0.. (labels, positions,
// velocities). Appends rows when `header` is false.
void write_ensemble_csv(std::ostream& out, const WorldEnsemble& e, bool header = true);
void write_ensemble_csv(const std::filesystem::path& path, const WorldEnsemble& e);
// Reads the last snapshot in the file (rows sharing the final t).
WorldEnsemble read_ensemble_csv(const std::filesystem::path& path);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace weylworlds
