#include "sda/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sda::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

Matrix class_means(const Matrix& x, const Labels& labels, int num_classes, Backend backend) {
  const Eigen::Index n = x.rows(), p = x.cols();
  require(static_cast<Eigen::Index>(labels.size()) == n, "class_means: label count != rows");
  std::vector<int> counts = class_sizes(labels, num_classes);
  Matrix means = Matrix::Zero(num_classes, p);

  auto column = [&](Eigen::Index j) {
    for (Eigen::Index k = 0; k < n; ++k) means(labels[k], j) += x(k, j);
    for (int c = 0; c < num_classes; ++c)
      if (counts[c] > 0) means(c, j) /= counts[c];
  };

  if (backend == Backend::Serial) {
    for (Eigen::Index j = 0; j < p; ++j) column(j);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < p; ++j) column(j);
  }
  return means;
}

Matrix pooled_residuals(const Matrix& x, const Labels& labels, const Matrix& means, Backend backend) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Matrix r(n, p);
  if (backend == Backend::Serial) {
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index k = 0; k < n; ++k) r(k, j) = x(k, j) - means(labels[k], j);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index k = 0; k < n; ++k) r(k, j) = x(k, j) - means(labels[k], j);
  }
  return r;
}

SquaredMoments squared_moments(const Matrix& residuals, Backend backend) {
  const Eigen::Index n = residuals.rows(), p = residuals.cols();
  SquaredMoments out{Vector(p), Vector(p)};

  auto column = [&](Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += residuals(k, j) * residuals(k, j);
    const double mean = s / static_cast<double>(n);
    double dev = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = residuals(k, j) * residuals(k, j) - mean;
      dev += d * d;
    }
    out.sum_sq[j] = s;
    out.sq_dev[j] = dev;
  };

  if (backend == Backend::Serial) {
    for (Eigen::Index j = 0; j < p; ++j) column(j);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < p; ++j) column(j);
  }
  return out;
}

namespace {

CorrelationSums correlation_sums_direct(const Matrix& z) {
  const Eigen::Index n = z.rows(), p = z.cols();
  const double nd = static_cast<double>(n);
  const double var_scale = nd / ((nd - 1.0) * (nd - 1.0) * (nd - 1.0));
  CorrelationSums out;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      double wbar = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) wbar += z(k, i) * z(k, j);
      wbar /= nd;
      double dev = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double d = z(k, i) * z(k, j) - wbar;
        dev += d * d;
      }
      const double r = nd / (nd - 1.0) * wbar;
      out.sum_r2 += 2.0 * r * r;
      out.sum_var += 2.0 * var_scale * dev;
    }
  }
  return out;
}

// sum_{i,j} (sum_k z_ki z_kj)^2 = ||Z Z^T||_F^2, and
// sum_{i,j} sum_k (z_ki z_kj)^2 = sum_k (sum_i z_ki^2)^2.
CorrelationSums correlation_sums_gram(const Matrix& z) {
  const Eigen::Index n = z.rows(), p = z.cols();
  const double nd = static_cast<double>(n);

  Matrix gram(n, n);
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(z);

  Vector gram_rows(n);    // sum_l G_kl^2
  Vector row_terms(n);    // (sum_i z_ki^2)^2 - sum_i z_ki^4
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < n; ++k) {
    double g = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      const double v = l >= k ? gram(l, k) : gram(k, l);
      g += v * v;
    }
    gram_rows[k] = g;
    double s2 = 0.0, s4 = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double sq = z(k, i) * z(k, i);
      s2 += sq;
      s4 += sq * sq;
    }
    row_terms[k] = s2 * s2 - s4;
  }

  Vector diag(p);  // (sum_k z_ki^2)^2
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < p; ++i) {
    const double d = z.col(i).squaredNorm();
    diag[i] = d * d;
  }

  double frob = 0.0, w2 = 0.0, dsum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    frob += gram_rows[k];
    w2 += row_terms[k];
  }
  for (Eigen::Index i = 0; i < p; ++i) dsum += diag[i];

  const double offdiag_products = frob - dsum;  // sum_{i!=j} (sum_k w_kij)^2
  CorrelationSums out;
  out.sum_r2 = offdiag_products / ((nd - 1.0) * (nd - 1.0));
  const double dev = w2 - offdiag_products / nd;
  out.sum_var = nd / ((nd - 1.0) * (nd - 1.0) * (nd - 1.0)) * dev;
  if (out.sum_r2 < 0.0) out.sum_r2 = 0.0;
  if (out.sum_var < 0.0) out.sum_var = 0.0;
  return out;
}

}  // namespace

CorrelationSums correlation_sums(const Matrix& z, Backend backend) {
  if (z.cols() < 2) return {};
  return backend == Backend::Serial ? correlation_sums_direct(z) : correlation_sums_gram(z);
}

Matrix apply_low_rank(const Matrix& rows, const Matrix& basis, const Vector& coef, double base,
                      Backend backend) {
  const Eigen::Index m = rows.rows();
  require(rows.cols() == basis.rows(), "apply_low_rank: dimension mismatch");
  Matrix out(m, rows.cols());

  auto one = [&](Eigen::Index i) {
    Vector proj = basis.transpose() * rows.row(i).transpose();
    proj.array() *= coef.array();
    out.row(i) = base * rows.row(i) + (basis * proj).transpose();
  };

  if (backend == Backend::Serial) {
    for (Eigen::Index i = 0; i < m; ++i) one(i);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) one(i);
  }
  return out;
}

}  // namespace sda::kernels
