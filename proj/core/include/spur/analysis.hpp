#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "spur/matrix.hpp"
#include "spur/pruner.hpp"

namespace spur {

// Magnitude statistics of the surviving weights of one matrix. `cv` is in
// percent; `std` is the population standard deviation.
struct SurvivorStats {
  double avg = 0.0;
  double std = 0.0;
  double cv = 0.0;
};

// Throws ContractError when the mask keeps nothing or shapes differ.
SurvivorStats survivor_stats(const Matrix& w, const Mask& m);

// Field-wise unweighted mean over matrices (cv is the mean of the per-matrix
// cv values, not recomputed from the pooled weights).
SurvivorStats aggregate_stats(std::span<const SurvivorStats> per_matrix);

// How strongly survivors concentrate into few rows/columns: 1 − H(p)/ln(n)
// on the normalized row (column) survivor counts. 0 = perfectly even.
struct GridScore {
  double row_score = 0.0;
  double col_score = 0.0;
  double grid = 0.0;
};

// Needs at least two rows, two columns and one survivor (ContractError).
GridScore grid_concentration(const Mask& m);

// Plain PBM (P1): surviving = 1 (black). One image row per line.
std::size_t export_mask_pbm(const Mask& m, std::ostream& out);
std::size_t export_mask_pbm(const Mask& m, const std::filesystem::path& path);

// Plain PGM (P2), maxval 255, pixel = round(255·|w|/max|w|).
std::size_t export_magnitude_pgm(const Matrix& w, std::ostream& out);
std::size_t export_magnitude_pgm(const Matrix& w, const std::filesystem::path& path);

// Readers for the two plain formats (comments are not supported since the
// exporters never emit them). Throw IoError on malformed input.
Mask read_pbm(std::istream& in);
// Returns raw pixel values 0..maxval.
Matrix read_pgm(std::istream& in);

}  // namespace spur
