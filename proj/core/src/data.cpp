#include "spur/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "spur/error.hpp"
#include "spur/rng.hpp"

namespace spur {
namespace {

void check_fraction(double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must lie in [0, 1)");
  }
}

std::vector<Split> tail_splits(std::size_t n, double test_fraction) {
  const auto test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 0.5));
  std::vector<Split> splits(n, Split::kTrain);
  for (std::size_t i = n - std::min(test, n); i < n; ++i) splits[i] = Split::kTest;
  return splits;
}

}  // namespace

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kDuplicate: return "duplicate";
    case TaskKind::kMajority: return "majority";
    case TaskKind::kBlobs: return "blobs";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "duplicate") return TaskKind::kDuplicate;
  if (lower == "majority") return TaskKind::kMajority;
  if (lower == "blobs") return TaskKind::kBlobs;
  throw ConfigError("unknown task '" + std::string(text) +
                    "' (expected duplicate, majority or blobs)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out;
  out.classes = classes;
  if (has_tokens()) {
    out.tokens.rows = indices.size();
    out.tokens.cols = tokens.cols;
    out.tokens.ids.reserve(indices.size() * tokens.cols);
    for (std::size_t i : indices) {
      auto first = tokens.ids.begin() + static_cast<std::ptrdiff_t>(i * tokens.cols);
      out.tokens.ids.insert(out.tokens.ids.end(), first,
                            first + static_cast<std::ptrdiff_t>(tokens.cols));
    }
  } else {
    out.features = Matrix(indices.size(), features.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      std::copy_n(features.row(indices[r]).begin(), features.cols(), out.features.row(r).begin());
    }
  }
  for (std::size_t i : indices) {
    out.labels.push_back(labels[i]);
    out.splits.push_back(splits[i]);
  }
  return out;
}

Dataset Dataset::subset(Split split) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < size(); ++i) {
    if (splits[i] == split) idx.push_back(i);
  }
  return select(idx);
}

Dataset gen_duplicate_task(std::uint64_t seed, std::size_t n, std::size_t len,
                           std::size_t vocab, double test_fraction) {
  if (vocab <= len) {
    throw ConfigError("duplicate task needs vocab > len (got vocab " + std::to_string(vocab) +
                      ", len " + std::to_string(len) + ")");
  }
  if (len < 2) throw ConfigError("duplicate task needs len >= 2");
  check_fraction(test_fraction);
  Rng rng(seed);
  Dataset d;
  d.classes = 2;
  d.tokens.rows = n;
  d.tokens.cols = len;
  d.tokens.ids.reserve(n * len);
  std::vector<std::size_t> pool(vocab);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    const std::size_t distinct = label == 0 ? len : len - 1;
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `distinct` slots are a uniform sample
    // without replacement.
    for (std::size_t j = 0; j < distinct; ++j) std::swap(pool[j], pool[j + rng.index(vocab - j)]);
    std::vector<std::size_t> seq(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(distinct));
    if (label == 1) {
      seq.push_back(seq[rng.index(distinct)]);
      rng.shuffle(std::span<std::size_t>(seq));
    }
    d.tokens.ids.insert(d.tokens.ids.end(), seq.begin(), seq.end());
    d.labels.push_back(label);
  }
  d.splits = tail_splits(n, test_fraction);
  return d;
}

Dataset gen_majority_task(std::uint64_t seed, std::size_t n, std::size_t len,
                          double test_fraction) {
  if (len == 0 || len % 2 == 0) {
    throw ConfigError("majority task needs an odd sequence length (got " + std::to_string(len) +
                      ")");
  }
  check_fraction(test_fraction);
  Rng rng(seed);
  Dataset d;
  d.classes = 2;
  d.tokens.rows = n;
  d.tokens.cols = len;
  d.tokens.ids.reserve(n * len);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t bit = rng.index(2);
      ones += bit;
      d.tokens.ids.push_back(bit);
    }
    d.labels.push_back(2 * ones > len ? 1 : 0);
  }
  d.splits = tail_splits(n, test_fraction);
  return d;
}

Dataset gen_blobs(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t classes,
                  double spread, double test_fraction) {
  if (classes < 2) throw ConfigError("blobs need at least 2 classes");
  if (dim == 0) throw ConfigError("blobs need dim >= 1");
  if (!(spread >= 0.0)) throw ConfigError("blobs spread must be >= 0");
  check_fraction(test_fraction);
  Rng rng(seed);
  Dataset d;
  d.classes = classes;
  d.features = Matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    for (std::size_t j = 0; j < dim; ++j) d.features(i, j) = spread * rng.normal();
    d.features(i, c % dim) += 4.0 * static_cast<double>(c);
    d.labels.push_back(c);
  }
  d.splits = tail_splits(n, test_fraction);
  return d;
}

}  // namespace spur
