#include "spur/params.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "spur/error.hpp"

namespace spur {
namespace {

constexpr std::array<std::pair<Role, std::string_view>, 13> kRoleNames{{
    {Role::kQ, "q"},
    {Role::kK, "k"},
    {Role::kV, "v"},
    {Role::kO, "o"},
    {Role::kFF1, "ff1"},
    {Role::kFF2, "ff2"},
    {Role::kDense, "dense"},
    {Role::kEmbedding, "embedding"},
    {Role::kPositional, "positional"},
    {Role::kBias, "bias"},
    {Role::kNormGain, "norm_gain"},
    {Role::kNormBias, "norm_bias"},
    {Role::kHead, "head"},
}};

}  // namespace

std::string_view to_string(Role role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& [r, name] : kRoleNames) {
    if (name == lower) return r;
  }
  return std::nullopt;
}

bool is_prunable(Role role) {
  switch (role) {
    case Role::kQ:
    case Role::kK:
    case Role::kV:
    case Role::kO:
    case Role::kFF1:
    case Role::kFF2:
    case Role::kDense:
      return true;
    default:
      return false;
  }
}

Param& ParamTable::add(std::string name, Role role, int layer, Matrix value) {
  if (index_.contains(name)) throw IntegrityError("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back(Param{std::move(name), role, layer, std::move(value)});
  return params_.back();
}

const Param* ParamTable::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Param* ParamTable::find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::optional<std::size_t> ParamTable::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Param& ParamTable::at(std::string_view name) const {
  if (const Param* p = find(name)) return *p;
  throw IntegrityError("no parameter named '" + std::string(name) + "'");
}

Param& ParamTable::at(std::string_view name) {
  if (Param* p = find(name)) return *p;
  throw IntegrityError("no parameter named '" + std::string(name) + "'");
}

bool operator==(const Param& a, const Param& b) {
  return a.name == b.name && a.role == b.role && a.layer == b.layer && a.value == b.value;
}

bool operator==(const ParamTable& a, const ParamTable& b) { return a.params_ == b.params_; }

}  // namespace spur
