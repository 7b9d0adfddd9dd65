#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>

namespace hais {

// Matrix files are either whitespace-delimited text (one row per line) or the
// raw binary layout: 8-byte magic "HAISMAT1", row and column counts as 32-bit
// little-endian unsigned, then row-major little-endian float64 payload.

Eigen::MatrixXd read_matrix(const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_text(std::istream& is, const std::string& origin = "<stream>");
Eigen::MatrixXd read_matrix_binary(std::istream& is, const std::string& origin = "<stream>");
void write_matrix_text(std::ostream& os, const Eigen::MatrixXd& m);
void write_matrix_binary(std::ostream& os, const Eigen::MatrixXd& m);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, bool binary);

/// 8- or 16-bit grayscale PGM (P2 or P5); 16-bit binary samples are
/// big-endian per the format. Values are returned unscaled.
Eigen::MatrixXd read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image, int max_value = 255);

/// FNV-1a over a file's bytes; the digest recorded in run manifests.
std::string fnv1a64_hex(const std::filesystem::path& path);

}  // namespace hais
