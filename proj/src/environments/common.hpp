#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "groundwork/environments.hpp"

namespace groundwork::env::detail {

inline const std::vector<std::string> kMoves{"up", "down", "left", "right"};

std::unique_ptr<Environment> make_sokoban();
std::unique_ptr<Environment> make_pushboulders();
std::unique_ptr<Environment> make_keke();
std::unique_ptr<Environment> make_clusterbox();
std::unique_ptr<Environment> make_babyai();

/// Splits "prefix_suffix" at the last underscore.
std::string suffix_after(const std::string& s, const std::string& prefix);

/// Uniform index in [0, n) from a 64-bit engine; platform independent.
inline std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

/// Border walls around a w x h grid.
LowState walled_room(int w, int h, const std::vector<std::string>& aux_keys, const std::string& wall = "wall");

/// Free interior cells (no objects), row-major.
std::vector<Coord> empty_cells(const LowState& s);

/// Removes and returns a random cell from the pool.
Coord take(std::mt19937_64& rng, std::vector<Coord>& pool);

int manhattan(Coord a, Coord b);

}  // namespace groundwork::env::detail
