#include "spur/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spur/error.hpp"

namespace spur {
namespace {

double concentration(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  double entropy = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    entropy -= p * std::log(p);
  }
  const double score = 1.0 - entropy / std::log(static_cast<double>(counts.size()));
  return std::clamp(score, 0.0, 1.0);
}

std::size_t write_to_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << body;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
  return body.size();
}

template <typename Fn>
std::string plain_image(const char* magic, std::size_t rows, std::size_t cols,
                        const char* maxval, Fn pixel) {
  std::ostringstream s;
  s << magic << '\n' << cols << ' ' << rows << '\n';
  if (maxval != nullptr) s << maxval << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) s << ' ';
      s << pixel(r, c);
    }
    s << '\n';
  }
  return s.str();
}

std::string pbm_body(const Mask& m) {
  return plain_image("P1", m.rows(), m.cols(), nullptr,
                     [&](std::size_t r, std::size_t c) { return m(r, c) ? 1 : 0; });
}

std::string pgm_body(const Matrix& w) {
  double peak = 0.0;
  for (double v : w.values()) peak = std::max(peak, std::fabs(v));
  return plain_image("P2", w.rows(), w.cols(), "255", [&](std::size_t r, std::size_t c) {
    if (peak == 0.0) return 0L;
    return std::lround(255.0 * std::fabs(w(r, c)) / peak);
  });
}

void expect_magic(std::istream& in, const std::string& magic) {
  std::string token;
  if (!(in >> token) || token != magic) {
    throw IoError("expected '" + magic + "' image, found '" + token + "'");
  }
}

}  // namespace

SurvivorStats survivor_stats(const Matrix& w, const Mask& m) {
  if (w.rows() != m.rows() || w.cols() != m.cols()) {
    throw ContractError("survivor_stats: weight " + shape_string(w) + " vs mask " +
                        shape_string(m.rows(), m.cols()));
  }
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!m.test(i)) continue;
    total += std::fabs(w[i]);
    ++count;
  }
  if (count == 0) throw ContractError("survivor_stats: mask keeps no entries");
  const double avg = total / static_cast<double>(count);
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!m.test(i)) continue;
    const double d = std::fabs(w[i]) - avg;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(count));
  return SurvivorStats{avg, sd, avg > 0.0 ? 100.0 * sd / avg : 0.0};
}

SurvivorStats aggregate_stats(std::span<const SurvivorStats> per_matrix) {
  if (per_matrix.empty()) throw ContractError("aggregate_stats: no matrices");
  SurvivorStats out;
  for (const SurvivorStats& s : per_matrix) {
    out.avg += s.avg;
    out.std += s.std;
    out.cv += s.cv;
  }
  const auto n = static_cast<double>(per_matrix.size());
  out.avg /= n;
  out.std /= n;
  out.cv /= n;
  return out;
}

GridScore grid_concentration(const Mask& m) {
  if (m.rows() < 2 || m.cols() < 2) {
    throw ContractError("grid_concentration: mask " + shape_string(m.rows(), m.cols()) +
                        " needs at least 2 rows and 2 columns");
  }
  if (m.popcount() == 0) throw ContractError("grid_concentration: mask keeps no entries");
  std::vector<double> row_counts(m.rows(), 0.0), col_counts(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m(r, c)) {
        row_counts[r] += 1.0;
        col_counts[c] += 1.0;
      }
  GridScore s;
  s.row_score = concentration(row_counts);
  s.col_score = concentration(col_counts);
  s.grid = (s.row_score + s.col_score) / 2.0;
  return s;
}

std::size_t export_mask_pbm(const Mask& m, std::ostream& out) {
  const std::string body = pbm_body(m);
  out << body;
  if (!out) throw IoError("PBM write failed");
  return body.size();
}

std::size_t export_mask_pbm(const Mask& m, const std::filesystem::path& path) {
  return write_to_file(path, pbm_body(m));
}

std::size_t export_magnitude_pgm(const Matrix& w, std::ostream& out) {
  const std::string body = pgm_body(w);
  out << body;
  if (!out) throw IoError("PGM write failed");
  return body.size();
}

std::size_t export_magnitude_pgm(const Matrix& w, const std::filesystem::path& path) {
  return write_to_file(path, pgm_body(w));
}

Mask read_pbm(std::istream& in) {
  expect_magic(in, "P1");
  std::size_t cols = 0, rows = 0;
  if (!(in >> cols >> rows)) throw IoError("PBM: missing dimensions");
  std::vector<std::uint8_t> bits(rows * cols);
  for (auto& b : bits) {
    int v = -1;
    if (!(in >> v) || (v != 0 && v != 1)) throw IoError("PBM: bad or missing pixel");
    b = static_cast<std::uint8_t>(v);
  }
  return Mask(rows, cols, std::move(bits));
}

Matrix read_pgm(std::istream& in) {
  expect_magic(in, "P2");
  std::size_t cols = 0, rows = 0;
  int maxval = 0;
  if (!(in >> cols >> rows >> maxval) || maxval <= 0) throw IoError("PGM: bad header");
  Matrix out(rows, cols);
  for (double& v : out.values()) {
    int px = -1;
    if (!(in >> px) || px < 0 || px > maxval) throw IoError("PGM: bad or missing pixel");
    v = px;
  }
  return out;
}

}  // namespace spur
