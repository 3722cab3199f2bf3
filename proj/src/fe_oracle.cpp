#include "promforge/fe_oracle.hpp"

#include "promforge/errors.hpp"

namespace promforge::fe {

DirectTensors reduced_tensors_direct(const Assembly& a, const MatrixXd& V) {
  require(V.rows() == a.dofs(), "reduced_tensors_direct: basis row count mismatch");
  require(V.cols() >= 1 && V.cols() <= 30, "reduced_tensors_direct: 1..30 basis vectors supported");
  const int m = static_cast<int>(V.cols());
  const double ea = a.axial_rigidity(), ei = a.bending_rigidity();
  const auto& rule = gauss5();

  MatrixXd k1 = MatrixXd::Zero(m, m);
  std::vector<double> k2(static_cast<std::size_t>(m) * m * m, 0.0);
  std::vector<double> k3(static_cast<std::size_t>(m) * m * m * m, 0.0);

  for (const auto& el : a.elements()) {
    // Element rows of V (clamped DOFs contribute zero rows).
    Eigen::Matrix<double, 6, Eigen::Dynamic> ve = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, m);
    for (int r = 0; r < 6; ++r)
      if (el.free[r] >= 0) ve.row(r) = V.row(el.free[r]);
    const Eigen::Vector4d z(el.shape_dofs.data());

    for (int gp = 0; gp < 5; ++gp) {
      const ShapeRows s = shape_rows(rule.xi[gp], el.length);
      const double z0p = s.dw.dot(z);
      const Eigen::RowVectorXd cu = s.du[0] * ve.row(0) + s.du[1] * ve.row(3);
      const Eigen::RowVectorXd g =
          s.dw[0] * ve.row(1) + s.dw[1] * ve.row(2) + s.dw[2] * ve.row(4) + s.dw[3] * ve.row(5);
      const Eigen::RowVectorXd h =
          s.d2w[0] * ve.row(1) + s.d2w[1] * ve.row(2) + s.d2w[2] * ve.row(4) + s.d2w[3] * ve.row(5);
      const Eigen::RowVectorXd l = cu + z0p * g;
      const double w = rule.weight[gp] * el.length;

      k1.noalias() += (w * ea) * l.transpose() * l + (w * ei) * h.transpose() * h;

      // Strain energy EA/2 (l.eta + (g.eta)^2/2)^2: third and fourth derivatives.
      const double c2 = 0.5 * w * ea, c3 = 0.5 * w * ea;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double gij = g[i] * g[j], lgij = l[i] * g[j] + g[i] * l[j];
          double* row2 = &k2[(static_cast<std::size_t>(i) * m + j) * m];
          for (int k = 0; k < m; ++k) row2[k] += c2 * (lgij * g[k] + gij * l[k]);
          for (int k = 0; k < m; ++k) {
            const double gijk = c3 * gij * g[k];
            double* row3 = &k3[((static_cast<std::size_t>(i) * m + j) * m + k) * m];
            for (int q = 0; q < m; ++q) row3[q] += gijk * g[q];
          }
        }
    }
  }

  DirectTensors out;
  out.linear = k1;
  out.quadratic = SymmetricTensor::symmetrize(3, m, k2, &out.asymmetry_quadratic);
  out.cubic = SymmetricTensor::symmetrize(4, m, k3, &out.asymmetry_cubic);
  return out;
}

}  // namespace promforge::fe
