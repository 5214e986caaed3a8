#include "spur/checkpoint.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spur/error.hpp"

namespace spur {
namespace {

struct RawTensor {
  std::string name;
  std::string role;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

void write_header(std::ostream& out, const std::string& name, std::string_view role,
                  std::size_t rows, std::size_t cols) {
  out << name << ' ' << role << ' ' << rows << ' ' << cols << '\n';
}

std::vector<RawTensor> read_tensors(std::istream& in, const std::string& source) {
  std::vector<RawTensor> out;
  RawTensor t;
  while (in >> t.name) {
    if (!(in >> t.role >> t.rows >> t.cols)) {
      throw IoError(source + ": malformed header for tensor '" + t.name + "'");
    }
    t.values.resize(t.rows * t.cols);
    for (double& v : t.values) {
      std::string token;
      if (!(in >> token)) {
        throw IoError(source + ": tensor '" + t.name + "' is truncated");
      }
      const char* end = token.data() + token.size();
      auto [ptr, ec] = std::from_chars(token.data(), end, v);
      if (ec != std::errc{} || ptr != end) {
        throw IoError(source + ": bad value '" + token + "' in tensor '" + t.name + "'");
      }
    }
    out.push_back(std::move(t));
    t = RawTensor{};
  }
  return out;
}

int layer_of(const std::string& name) {
  constexpr std::string_view prefix = "layer";
  if (name.rfind(prefix, 0) != 0) return -1;
  const auto dot = name.find('.');
  if (dot == std::string::npos) return -1;
  int layer = -1;
  auto [ptr, ec] = std::from_chars(name.data() + prefix.size(), name.data() + dot, layer);
  return ec == std::errc{} && ptr == name.data() + dot ? layer : -1;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

void write_checkpoint(const ParamTable& params, std::ostream& out) {
  std::vector<const Param*> sorted;
  for (const Param& p : params) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const Param* a, const Param* b) { return a->name < b->name; });
  for (const Param* p : sorted) {
    write_header(out, p->name, to_string(p->role), p->value.rows(), p->value.cols());
    for (std::size_t r = 0; r < p->value.rows(); ++r) {
      auto row = p->value.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << format_double(row[c]);
      }
      out << '\n';
    }
  }
}

void write_checkpoint(const ParamTable& params, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_checkpoint(params, out);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

ParamTable read_checkpoint(std::istream& in) {
  ParamTable table;
  for (RawTensor& t : read_tensors(in, "checkpoint")) {
    auto role = parse_role(t.role);
    if (!role) throw IoError("checkpoint: unknown role '" + t.role + "' for '" + t.name + "'");
    const int layer = layer_of(t.name);
    table.add(t.name, *role, layer, Matrix(t.rows, t.cols, std::move(t.values)));
  }
  return table;
}

ParamTable read_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_checkpoint(in);
}

void write_masks(const PruningState& state, const ParamTable& params, std::ostream& out) {
  // std::map iteration is already in name order.
  for (const auto& [name, mask] : state.masks) {
    const Param* p = params.find(name);
    if (p == nullptr) throw IntegrityError("mask '" + name + "' has no matching weight");
    write_header(out, name, to_string(p->role), mask.rows(), mask.cols());
    for (std::size_t r = 0; r < mask.rows(); ++r) {
      for (std::size_t c = 0; c < mask.cols(); ++c) {
        if (c) out << ' ';
        out << (mask(r, c) ? '1' : '0');
      }
      out << '\n';
    }
  }
}

void write_masks(const PruningState& state, const ParamTable& params,
                 const std::filesystem::path& path) {
  auto out = open_out(path);
  write_masks(state, params, out);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

PruningState read_masks(std::istream& in) {
  PruningState state;
  std::size_t kept = 0, total = 0;
  for (RawTensor& t : read_tensors(in, "masks")) {
    std::vector<std::uint8_t> bits(t.values.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (t.values[i] != 0.0 && t.values[i] != 1.0) {
        throw IoError("masks: non-binary value in '" + t.name + "'");
      }
      bits[i] = t.values[i] != 0.0 ? 1 : 0;
      kept += bits[i];
    }
    total += bits.size();
    state.masks.emplace(t.name, Mask(t.rows, t.cols, std::move(bits)));
  }
  state.current_density = total == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(total);
  return state;
}

PruningState read_masks(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_masks(in);
}

}  // namespace spur
