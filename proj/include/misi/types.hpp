#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace misi {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEps0 = 8.8541878128e-12;  // F/m
inline constexpr double kMu0 = 1.25663706212e-6;   // H/m

inline double angular_frequency(double f) { return 2.0 * kPi * f; }
inline double wavenumber(double f) { return angular_frequency(f) * std::sqrt(kMu0 * kEps0); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Square n x n grid, row-major (row = y index, column = x index).
template <class T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::size_t n, T fill = T{}) : n_(n), values_(n * n, fill) {}

  std::size_t n() const { return n_; }
  std::size_t size() const { return values_.size(); }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& at(std::size_t iy, std::size_t ix) { return values_[iy * n_ + ix]; }
  const T& at(std::size_t iy, std::size_t ix) const { return values_[iy * n_ + ix]; }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> values_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<cplx>;

/// Row-major complex block. Rows are transmitters; columns are pixels or receivers.
class ComplexBatch {
 public:
  ComplexBatch() = default;
  ComplexBatch(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<cplx> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const cplx> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  bool same_shape(const ComplexBatch& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const ComplexBatch&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

}  // namespace misi
