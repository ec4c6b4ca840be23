#pragma once

// Internal binary serialization helpers for checkpoints and the embedding
// cache. Little-endian, raw IEEE-754 doubles, so round-trips are bit-exact.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "patsnd/errors.hpp"

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");
static_assert(std::endian::native == std::endian::little, "little-endian platform required");

namespace patsnd::binser {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }

  void magic(const char tag[8]) { raw(tag, 8); }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  void vec(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }

  // Row-major layout regardless of Eigen's storage order.
  void mat(const Eigen::MatrixXd& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        f64(m(r, c));
      }
    }
  }

 private:
  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("binary write failed");
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

  std::uint8_t u8() { std::uint8_t v; raw(&v, sizeof v); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
  double f64() { double v; raw(&v, sizeof v); return v; }

  void expect_magic(const char tag[8]) {
    char got[8];
    raw(got, 8);
    if (std::memcmp(got, tag, 8) != 0) {
      throw CheckpointError(context_ + ": bad magic header");
    }
  }

  std::string str(std::size_t max_len = 1 << 20) {
    std::uint32_t n = u32();
    if (n > max_len) throw CheckpointError(context_ + ": string length out of range");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

  Eigen::VectorXd vec(std::size_t max_len = 1 << 26) {
    std::uint32_t n = u32();
    if (n > max_len) throw CheckpointError(context_ + ": vector length out of range");
    Eigen::VectorXd v(n);
    raw(v.data(), static_cast<std::size_t>(n) * sizeof(double));
    return v;
  }

  Eigen::MatrixXd mat(std::size_t max_elems = 1 << 28) {
    std::uint32_t rows = u32();
    std::uint32_t cols = u32();
    if (static_cast<std::size_t>(rows) * cols > max_elems) {
      throw CheckpointError(context_ + ": matrix size out of range");
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        m(r, c) = f64();
      }
    }
    return m;
  }

 private:
  void raw(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CheckpointError(context_ + ": truncated or corrupted file");
    }
  }
  std::istream& in_;
  std::string context_;
};

}  // namespace patsnd::binser
