#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spur/matrix.hpp"

namespace spur {

// What a parameter tensor does inside a model. Only the dense weight roles
// (Q, K, V, O, FF1, FF2 and the MLP's hidden Dense) are prunable.
enum class Role : std::uint8_t {
  kQ,
  kK,
  kV,
  kO,
  kFF1,
  kFF2,
  kDense,
  kEmbedding,
  kPositional,
  kBias,
  kNormGain,
  kNormBias,
  kHead,
};

std::string_view to_string(Role role);
// Inverse of to_string; case-insensitive. Returns nullopt for unknown names.
std::optional<Role> parse_role(std::string_view text);
bool is_prunable(Role role);

struct Param {
  std::string name;
  Role role = Role::kDense;
  // Encoder/hidden layer index, or -1 for parameters outside any layer.
  int layer = -1;
  Matrix value;
};

// Named parameter tensors in insertion order. Names are unique.
class ParamTable {
 public:
  Param& add(std::string name, Role role, int layer, Matrix value);

  const Param* find(std::string_view name) const;
  Param* find(std::string_view name);
  std::optional<std::size_t> index_of(std::string_view name) const;
  const Param& at(std::string_view name) const;
  Param& at(std::string_view name);

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  Param& operator[](std::size_t i) { return params_[i]; }

  friend bool operator==(const ParamTable& a, const ParamTable& b);

 private:
  std::vector<Param> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

bool operator==(const Param& a, const Param& b);

}  // namespace spur
