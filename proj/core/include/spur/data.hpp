#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spur/matrix.hpp"
#include "spur/model.hpp"

namespace spur {

enum class TaskKind : std::uint8_t { kDuplicate, kMajority, kBlobs };

std::string_view to_string(TaskKind task);
TaskKind parse_task_kind(std::string_view text);

enum class Split : std::uint8_t { kTrain, kTest };

// Labelled examples. Token tasks fill `tokens`; BLOBS fills `features`.
struct Dataset {
  std::size_t classes = 0;
  TokenGrid tokens;
  Matrix features;
  std::vector<std::size_t> labels;
  std::vector<Split> splits;

  bool has_tokens() const noexcept { return tokens.rows != 0; }
  std::size_t size() const noexcept { return labels.size(); }
  Dataset subset(Split split) const;
  Dataset select(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Label 1 sequences contain a repeated token, label 0 sequences are all
// distinct. Labels alternate 0, 1, 0, ... so classes are balanced. The last
// round(n·test_fraction) examples form the test split.
Dataset gen_duplicate_task(std::uint64_t seed, std::size_t n, std::size_t len,
                           std::size_t vocab, double test_fraction = 0.2);

// Uniform random bit strings of odd length labelled by their majority bit.
Dataset gen_majority_task(std::uint64_t seed, std::size_t n, std::size_t len,
                          double test_fraction = 0.2);

// Gaussian clusters: class c is centred on 4·c·e_(c mod dim) with isotropic
// standard deviation `spread`. Labels cycle through the classes.
Dataset gen_blobs(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t classes,
                  double spread, double test_fraction = 0.2);

// Independent stream seed derived from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spur
