#pragma once

#include <cstdint>
#include <vector>

#include "sosvn/geometry.hpp"
#include "sosvn/measurement.hpp"
#include "sosvn/phantoms.hpp"

namespace sosvn {

/// Straight-ray measurements of `map`. With factor > 1 the map is upsampled
/// (nearest neighbour) and rays end at the centers of the fine pixels; the
/// fine measurements are then block-averaged back to the grid of `L`.
/// factor == 1 is the forward product L x itself.
MeasurementSet simulate_ray(const SoSMap& map, int factor, const RayMatrix& L);

/// Independent Bernoulli invalidation with probability `rate`.
std::vector<std::uint8_t> gen_mask_uniform(std::size_t n_rows, double rate, std::uint64_t seed);

/// Per pair: a coarse uniform field bilinearly upsampled to the grid; the
/// round(rate * n_pixels) lowest cells are invalidated.
std::vector<std::uint8_t> gen_mask_patchy(const Grid& grid, std::size_t n_pairs, double rate, std::uint64_t seed,
                                          int coarse = 16);

/// Applies a mask: rows switched off are zeroed and u is recomputed.
void apply_mask(MeasurementSet& ms, const std::vector<std::uint8_t>& mask);

/// Adds N(0, eta * sigma0) (variance) to valid rows.
void add_noise(MeasurementSet& ms, double eta, std::uint64_t seed, double sigma0);

/// Moran's I of one pair's validity pattern (rook neighbourhood).
double morans_i(const std::vector<std::uint8_t>& mask, const Grid& grid, std::size_t pair);

}  // namespace sosvn
