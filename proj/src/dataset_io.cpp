#include "hais/dataset_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hais/errors.hpp"

namespace hais {

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'A', 'I', 'S', 'M', 'A', 'T', '1'};

std::uint32_t read_u32_le(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  const std::array<unsigned char, 4> b = {static_cast<unsigned char>(v),
                                          static_cast<unsigned char>(v >> 8),
                                          static_cast<unsigned char>(v >> 16),
                                          static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

[[noreturn]] void bad_input(const std::string& origin, const std::string& what) {
  throw InputError(origin + ": " + what);
}

// PGM helpers: skip whitespace and '#' comments between header tokens.
int next_pgm_int(std::istream& is, const std::string& origin) {
  for (;;) {
    int c = is.peek();
    if (c == EOF) bad_input(origin, "truncated PGM header");
    if (c == '#') {
      std::string line;
      std::getline(is, line);
      continue;
    }
    if (std::isspace(c)) {
      is.get();
      continue;
    }
    break;
  }
  int value = 0;
  if (!(is >> value)) bad_input(origin, "malformed PGM header");
  return value;
}

}  // namespace

Eigen::MatrixXd read_matrix_text(std::istream& is, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) bad_input(origin, "non-numeric token on line " + std::to_string(rows.size() + 1));
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      bad_input(origin, "ragged rows: line " + std::to_string(rows.size() + 1) + " has " +
                            std::to_string(row.size()) + " values, expected " +
                            std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) bad_input(origin, "no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Eigen::MatrixXd read_matrix_binary(std::istream& is, const std::string& origin) {
  std::array<char, 8> magic{};
  is.read(magic.data(), 8);
  if (!is || magic != kMagic) bad_input(origin, "missing HAISMAT1 magic");
  const std::uint32_t rows = read_u32_le(is);
  const std::uint32_t cols = read_u32_le(is);
  if (!is) bad_input(origin, "truncated header");
  Eigen::MatrixXd m(rows, cols);
  std::vector<double> row(cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * sizeof(double)));
    if (!is) bad_input(origin, "truncated payload at row " + std::to_string(i));
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = row[j];
  }
  return m;
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(path.string() + ": cannot open");
  std::array<char, 8> head{};
  is.read(head.data(), 8);
  const bool binary = is.gcount() == 8 && head == kMagic;
  is.clear();
  is.seekg(0);
  return binary ? read_matrix_binary(is, path.string()) : read_matrix_text(is, path.string());
}

void write_matrix_text(std::ostream& os, const Eigen::MatrixXd& m) {
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      os << buf << (j + 1 < m.cols() ? " " : "");
    }
    os << "\n";
  }
}

void write_matrix_binary(std::ostream& os, const Eigen::MatrixXd& m) {
  os.write(kMagic.data(), 8);
  write_u32_le(os, static_cast<std::uint32_t>(m.rows()));
  write_u32_le(os, static_cast<std::uint32_t>(m.cols()));
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, bool binary) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(path.string() + ": cannot open for writing");
  if (binary)
    write_matrix_binary(os, m);
  else
    write_matrix_text(os, m);
}

Eigen::MatrixXd read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(path.string() + ": cannot open");
  const std::string origin = path.string();
  std::string format;
  is >> format;
  if (format != "P2" && format != "P5") bad_input(origin, "not a PGM file (want P2 or P5)");
  const int cols = next_pgm_int(is, origin);
  const int rows = next_pgm_int(is, origin);
  const int maxval = next_pgm_int(is, origin);
  if (cols < 1 || rows < 1) bad_input(origin, "empty image");
  if (maxval < 1 || maxval > 65535) bad_input(origin, "max value out of range");

  Eigen::MatrixXd img(rows, cols);
  if (format == "P2") {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) img(r, c) = next_pgm_int(is, origin);
    return img;
  }
  is.get();  // single whitespace after maxval
  const bool wide = maxval > 255;
  std::vector<unsigned char> row(static_cast<std::size_t>(cols) * (wide ? 2 : 1));
  for (int r = 0; r < rows; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!is) bad_input(origin, "truncated pixel data at row " + std::to_string(r));
    for (int c = 0; c < cols; ++c) {
      img(r, c) = wide ? 256.0 * row[static_cast<std::size_t>(2 * c)] +
                             row[static_cast<std::size_t>(2 * c + 1)]
                       : row[static_cast<std::size_t>(c)];
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image, int max_value) {
  if (max_value < 1 || max_value > 65535)
    throw ContractViolation("write_pgm: max value out of range");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(path.string() + ": cannot open for writing");
  os << "P5\n" << image.cols() << " " << image.rows() << "\n" << max_value << "\n";
  const bool wide = max_value > 255;
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      long v = std::lround(image(r, c));
      v = std::clamp(v, 0L, static_cast<long>(max_value));
      if (wide) {
        os.put(static_cast<char>((v >> 8) & 0xff));
        os.put(static_cast<char>(v & 0xff));
      } else {
        os.put(static_cast<char>(v & 0xff));
      }
    }
  }
}

std::string fnv1a64_hex(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(path.string() + ": cannot open for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!is) break;
  }
  char out[19];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace hais
