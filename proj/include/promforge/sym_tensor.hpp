#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <vector>

namespace promforge {

/// Fully symmetric tensor of order 3 or 4 stored by its unique entries
/// (sorted index tuples i <= j <= k [<= l], lexicographic order).
/// Contractions expand each unique entry over its permutation orbit with
/// precomputed multiplicities.
class SymmetricTensor {
 public:
  struct Layout;

  SymmetricTensor() = default;
  SymmetricTensor(int order, int dim);

  int order() const { return order_; }
  int dim() const { return dim_; }
  int unique_count() const { return static_cast<int>(values_.size()); }
  static int unique_count(int order, int dim);

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }

  /// Sorted index tuple of the u-th unique entry (unused trailing slots are -1).
  std::array<int, 4> tuple(int u) const;
  /// Unique-entry position of an arbitrary (unsorted) index tuple.
  int position(std::array<int, 4> idx) const;

  double operator()(int i, int j, int k) const;
  double operator()(int i, int j, int k, int l) const;
  void set(std::array<int, 4> idx, double v) { values_[position(idx)] = v; }

  /// v_i = T_{i j k ..} x_j x_k ..
  Eigen::VectorXd contract_vector(const Eigen::VectorXd& x) const;
  /// A_ij = T_{i j k ..} x_k ..
  Eigen::MatrixXd contract_matrix(const Eigen::VectorXd& x) const;

  /// Dense row-major copy, dim^order entries.
  std::vector<double> to_dense() const;
  /// Average over all index permutations of a dense tensor. Returns the
  /// relative Frobenius norm of the removed antisymmetric part.
  static SymmetricTensor symmetrize(int order, int dim, const std::vector<double>& dense,
                                    double* asymmetry = nullptr);

  double norm() const;  // Frobenius norm of the full tensor

  SymmetricTensor& operator*=(double s) {
    values_ *= s;
    return *this;
  }

 private:
  int order_ = 0;
  int dim_ = 0;
  Eigen::VectorXd values_;
  std::shared_ptr<const Layout> layout_;
};

}  // namespace promforge
