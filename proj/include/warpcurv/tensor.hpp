#pragma once

#include <cstddef>
#include <vector>

namespace warpcurv {

// Dense cube of n^3 reals indexed (a, b, c).
class Rank3 {
 public:
  Rank3() = default;
  explicit Rank3(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n) {}

  int size() const { return n_; }

  double& operator()(int a, int b, int c) { return data_[idx(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[idx(a, b, c)]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = v < 0 ? (-v > m ? -v : m) : (v > m ? v : m);
    return m;
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t idx(int a, int b, int c) const {
    return (static_cast<std::size_t>(a) * n_ + b) * n_ + c;
  }
  int n_ = 0;
  std::vector<double> data_;
};

// Connection coefficients Gamma^k_{ij} stored as (k, i, j).
using ConnectionCoefficients = Rank3;

// Dense n^4 array indexed (a, b, c, d).
class Rank4 {
 public:
  Rank4() = default;
  explicit Rank4(int n)
      : n_(n), data_(static_cast<std::size_t>(n) * n * n * n) {}

  int size() const { return n_; }

  double& operator()(int a, int b, int c, int d) {
    return data_[idx(a, b, c, d)];
  }
  double operator()(int a, int b, int c, int d) const {
    return data_[idx(a, b, c, d)];
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t idx(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d;
  }
  int n_ = 0;
  std::vector<double> data_;
};

}  // namespace warpcurv
