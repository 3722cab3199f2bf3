#include "promforge/sym_tensor.hpp"

#include "promforge/errors.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace promforge {

struct SymmetricTensor::Layout {
  struct VecTerm {
    int out;
    double coeff;
    std::array<int, 3> rest;
  };
  struct MatTerm {
    int i, j;
    double coeff;
    std::array<int, 2> rest;
  };

  int order = 0, dim = 0;
  std::vector<std::array<int, 4>> tuples;
  std::vector<int> lookup;
  std::vector<double> orbit;
  std::vector<VecTerm> vec_terms;
  std::vector<int> vec_offsets;
  std::vector<MatTerm> mat_terms;
  std::vector<int> mat_offsets;
};

namespace {

using Layout = SymmetricTensor::Layout;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Number of distinct orderings of a sorted multiset.
double orderings(const int* s, int n) {
  double c = factorial(n);
  int run = 1;
  for (int i = 1; i <= n; ++i) {
    if (i < n && s[i] == s[i - 1]) {
      ++run;
    } else {
      c /= factorial(run);
      run = 1;
    }
  }
  return c;
}

void enumerate(int order, int dim, int pos, std::array<int, 4>& cur, std::vector<std::array<int, 4>>& out) {
  if (pos == order) {
    out.push_back(cur);
    return;
  }
  for (int v = pos == 0 ? 0 : cur[pos - 1]; v < dim; ++v) {
    cur[pos] = v;
    enumerate(order, dim, pos + 1, cur, out);
  }
}

std::shared_ptr<const Layout> build_layout(int order, int dim) {
  auto L = std::make_shared<Layout>();
  L->order = order;
  L->dim = dim;
  std::array<int, 4> cur = {-1, -1, -1, -1};
  enumerate(order, dim, 0, cur, L->tuples);

  std::size_t dense = 1;
  for (int r = 0; r < order; ++r) dense *= static_cast<std::size_t>(dim);
  L->lookup.assign(dense, -1);

  for (int u = 0; u < static_cast<int>(L->tuples.size()); ++u) {
    const auto& t = L->tuples[u];
    L->orbit.push_back(orderings(t.data(), order));

    // Fill the dense lookup for every permutation of the tuple.
    std::array<int, 4> p = t;
    std::sort(p.begin(), p.begin() + order);
    do {
      std::size_t lin = 0;
      for (int r = 0; r < order; ++r) lin = lin * dim + p[r];
      L->lookup[lin] = u;
    } while (std::next_permutation(p.begin(), p.begin() + order));

    L->vec_offsets.push_back(static_cast<int>(L->vec_terms.size()));
    for (int a = 0; a < order; ++a) {
      if (a > 0 && t[a] == t[a - 1]) continue;
      Layout::VecTerm term{t[a], 0.0, {-1, -1, -1}};
      int n = 0;
      for (int b = 0; b < order; ++b)
        if (b != a) term.rest[n++] = t[b];
      term.coeff = orderings(term.rest.data(), n);
      L->vec_terms.push_back(term);
    }

    L->mat_offsets.push_back(static_cast<int>(L->mat_terms.size()));
    for (int a = 0; a < order; ++a) {
      if (a > 0 && t[a] == t[a - 1]) continue;
      for (int b = 0; b < order; ++b) {
        if (b == a) continue;
        // First occurrence of value t[b] among the slots other than a.
        bool first = true;
        for (int c = 0; c < b; ++c)
          if (c != a && t[c] == t[b]) first = false;
        if (!first) continue;
        Layout::MatTerm term{t[a], t[b], 0.0, {-1, -1}};
        int n = 0;
        for (int c = 0; c < order; ++c)
          if (c != a && c != b) term.rest[n++] = t[c];
        term.coeff = orderings(term.rest.data(), n);
        L->mat_terms.push_back(term);
      }
    }
  }
  L->vec_offsets.push_back(static_cast<int>(L->vec_terms.size()));
  L->mat_offsets.push_back(static_cast<int>(L->mat_terms.size()));
  return L;
}

std::shared_ptr<const Layout> layout_for(int order, int dim) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const Layout>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{order, dim}];
  if (!slot) slot = build_layout(order, dim);
  return slot;
}

}  // namespace

SymmetricTensor::SymmetricTensor(int order, int dim) : order_(order), dim_(dim) {
  require(order == 3 || order == 4, "SymmetricTensor supports orders 3 and 4");
  require(dim >= 1 && dim <= 60, "SymmetricTensor dimension out of range");
  layout_ = layout_for(order, dim);
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_->tuples.size()));
}

int SymmetricTensor::unique_count(int order, int dim) {
  // C(dim + order - 1, order)
  double c = 1.0;
  for (int r = 0; r < order; ++r) c = c * (dim + r) / (r + 1);
  return static_cast<int>(c + 0.5);
}

std::array<int, 4> SymmetricTensor::tuple(int u) const { return layout_->tuples[u]; }

int SymmetricTensor::position(std::array<int, 4> idx) const {
  std::size_t lin = 0;
  for (int r = 0; r < order_; ++r) {
    require(idx[r] >= 0 && idx[r] < dim_, "SymmetricTensor index out of range");
    lin = lin * dim_ + idx[r];
  }
  return layout_->lookup[lin];
}

double SymmetricTensor::operator()(int i, int j, int k) const { return values_[position({i, j, k, -1})]; }

double SymmetricTensor::operator()(int i, int j, int k, int l) const {
  return values_[position({i, j, k, l})];
}

Eigen::VectorXd SymmetricTensor::contract_vector(const Eigen::VectorXd& x) const {
  require(x.size() == dim_, "contract_vector: dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  const int rest = order_ - 1;
  for (int u = 0; u < values_.size(); ++u) {
    const double v = values_[u];
    if (v == 0.0) continue;
    for (int t = layout_->vec_offsets[u]; t < layout_->vec_offsets[u + 1]; ++t) {
      const auto& term = layout_->vec_terms[t];
      double p = term.coeff * v;
      for (int r = 0; r < rest; ++r) p *= x[term.rest[r]];
      out[term.out] += p;
    }
  }
  return out;
}

Eigen::MatrixXd SymmetricTensor::contract_matrix(const Eigen::VectorXd& x) const {
  require(x.size() == dim_, "contract_matrix: dimension mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
  const int rest = order_ - 2;
  for (int u = 0; u < values_.size(); ++u) {
    const double v = values_[u];
    if (v == 0.0) continue;
    for (int t = layout_->mat_offsets[u]; t < layout_->mat_offsets[u + 1]; ++t) {
      const auto& term = layout_->mat_terms[t];
      double p = term.coeff * v;
      for (int r = 0; r < rest; ++r) p *= x[term.rest[r]];
      out(term.i, term.j) += p;
    }
  }
  return out;
}

std::vector<double> SymmetricTensor::to_dense() const {
  std::vector<double> d(layout_->lookup.size());
  for (std::size_t lin = 0; lin < d.size(); ++lin) d[lin] = values_[layout_->lookup[lin]];
  return d;
}

SymmetricTensor SymmetricTensor::symmetrize(int order, int dim, const std::vector<double>& dense,
                                            double* asymmetry) {
  SymmetricTensor t(order, dim);
  require(dense.size() == t.layout_->lookup.size(), "symmetrize: dense size mismatch");
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(t.unique_count());
  for (std::size_t lin = 0; lin < dense.size(); ++lin) sums[t.layout_->lookup[lin]] += dense[lin];
  for (int u = 0; u < t.unique_count(); ++u) t.values_[u] = sums[u] / t.layout_->orbit[u];
  if (asymmetry) {
    double diff = 0.0, total = 0.0;
    for (std::size_t lin = 0; lin < dense.size(); ++lin) {
      const double d = dense[lin] - t.values_[t.layout_->lookup[lin]];
      diff += d * d;
      total += dense[lin] * dense[lin];
    }
    *asymmetry = total > 0.0 ? std::sqrt(diff / total) : 0.0;
  }
  return t;
}

double SymmetricTensor::norm() const {
  double s = 0.0;
  for (int u = 0; u < values_.size(); ++u) s += layout_->orbit[u] * values_[u] * values_[u];
  return std::sqrt(s);
}

}  // namespace promforge
