#pragma once

#include <filesystem>
#include <iosfwd>

#include "spur/format.hpp"
#include "spur/params.hpp"
#include "spur/pruner.hpp"

namespace spur {

// Plain-text tensor dump. Each tensor is a header line `name role rows cols`
// followed by one line per row of space-separated values printed with 17
// significant digits. Tensors appear in lexicographic name order.
void write_checkpoint(const ParamTable& params, std::ostream& out);
void write_checkpoint(const ParamTable& params, const std::filesystem::path& path);
ParamTable read_checkpoint(std::istream& in);
ParamTable read_checkpoint(const std::filesystem::path& path);

// Masks in the same layout with 0/1 values; the role column is the role of
// the masked weight in `params`.
void write_masks(const PruningState& state, const ParamTable& params, std::ostream& out);
void write_masks(const PruningState& state, const ParamTable& params,
                 const std::filesystem::path& path);
PruningState read_masks(std::istream& in);
PruningState read_masks(const std::filesystem::path& path);

}  // namespace spur
