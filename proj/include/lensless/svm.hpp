#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/featmat.hpp"

namespace lensless {

struct KernelSpec {
  enum class Type { Linear, Rbf };
  Type type = Type::Linear;
  double gamma = 1.0;  // rbf only
};

inline double kernel_eval(const KernelSpec& k, const float* a, const float* b, size_t dim) {
  if (k.type == KernelSpec::Type::Linear) return dot_f(a, b, dim);
  return std::exp(-k.gamma * sqdist_f(a, b, dim));
}

struct SmoOptions {
  double C = 1.0;
  KernelSpec kernel;
  double tol = 1e-3;   // stop when the max KKT violation m - M drops below this
  long max_iter = 0;   // 0 = auto: max(20000, 200 * n)
  size_t gram_budget_bytes = size_t(1) << 30;
  // Test hook, called once per pair update with the dual objective value.
  std::function<void(long iter, double objective)> observer;
};

struct SvmBinaryModel {
  size_t dim = 0;
  std::vector<float> support_vectors;  // n_support x dim, row-major
  std::vector<float> alphas;           // in [0, C]
  std::vector<int8_t> signs;           // +1 / -1
  float bias = 0.0f;
  KernelSpec kernel;
  double C = 1.0;
  bool converged = false;
  long iterations = 0;
  double kkt_violation = 0.0;  // final m - M

  size_t n_support() const { return alphas.size(); }
};

inline double svm_predict_binary(const SvmBinaryModel& m, const float* x, size_t dim) {
  if (dim != m.dim) {
    fail(ErrorKind::Shape, "svm input dim " + std::to_string(dim) + " != model dim " +
                               std::to_string(m.dim));
  }
  double acc = 0.0;
  for (size_t i = 0; i < m.n_support(); ++i) {
    acc += double(m.alphas[i]) * double(m.signs[i]) *
           kernel_eval(m.kernel, m.support_vectors.data() + i * dim, x, dim);
  }
  return acc + double(m.bias);
}

namespace detail {

// Kernel row provider: precomputes the full Gram matrix when it fits the
// budget, otherwise recomputes rows on demand (slower, same values — entries
// are rounded to f32 in both paths).
class GramRows {
 public:
  GramRows(const FeatureMatrix& X, const KernelSpec& kernel, size_t budget)
      : X_(X), kernel_(kernel), n_(X.rows) {
    full_ = n_ * n_ * sizeof(float) <= budget;
    if (full_) {
      gram_.resize(n_ * n_);
      for (size_t i = 0; i < n_; ++i) {
        for (size_t j = 0; j <= i; ++j) {
          float v = float(kernel_eval(kernel_, X_.row(i), X_.row(j), X_.dim));
          gram_[i * n_ + j] = v;
          gram_[j * n_ + i] = v;
        }
      }
    } else {
      scratch_a_.resize(n_);
      scratch_b_.resize(n_);
    }
  }

  // Valid until the next row() call with the same slot.
  const float* row(size_t i, int slot) {
    if (full_) return gram_.data() + i * n_;
    std::vector<float>& buf = slot == 0 ? scratch_a_ : scratch_b_;
    for (size_t j = 0; j < n_; ++j) {
      buf[j] = float(kernel_eval(kernel_, X_.row(i), X_.row(j), X_.dim));
    }
    return buf.data();
  }

 private:
  const FeatureMatrix& X_;
  KernelSpec kernel_;
  size_t n_;
  bool full_ = false;
  std::vector<float> gram_;
  std::vector<float> scratch_a_, scratch_b_;
};

}  // namespace detail

// SMO with maximal-violating-pair working-set selection. Maintains the
// gradient G_t of the dual objective (G_t = y_t * f0(x_t) - 1 where f0 is the
// bias-free decision value); a pair step of size lam along the feasible
// direction updates G_t by y_t * lam * (K_ti - K_tj), which keeps every
// iteration O(n). Selection scans indices in ascending order, so ties always
// resolve the same way and training is deterministic (the seed argument is
// accepted for interface stability but the solver draws nothing from it).
inline SvmBinaryModel svm_train_binary(const FeatureMatrix& X, const std::vector<int>& y,
                                       const SmoOptions& opt, uint64_t /*seed*/ = 0) {
  size_t n = X.rows;
  if (n == 0 || y.size() != n) fail(ErrorKind::Shape, "svm: labels do not match rows");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else fail(ErrorKind::Domain, "svm: labels must be +1/-1");
  }
  if (!has_pos || !has_neg) fail(ErrorKind::Domain, "svm: both classes must be present");
  if (!(opt.C > 0.0)) fail(ErrorKind::Config, "svm: C must be > 0");

  detail::GramRows gram(X, opt.kernel, opt.gram_budget_bytes);
  const double C = opt.C;
  long max_iter = opt.max_iter > 0 ? opt.max_iter : std::max(20000L, 200L * long(n));

  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);
  double m_val = 0.0, M_val = 0.0;
  bool converged = false;
  long iter = 0;

  auto select = [&](size_t& i_out, size_t& j_out) {
    double m = -std::numeric_limits<double>::infinity();
    double M = std::numeric_limits<double>::infinity();
    size_t mi = n, Mj = n;
    for (size_t t = 0; t < n; ++t) {
      double v = -double(y[t]) * G[t];
      bool in_up = (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0);
      bool in_low = (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C);
      if (in_up && v > m) {
        m = v;
        mi = t;
      }
      if (in_low && v < M) {
        M = v;
        Mj = t;
      }
    }
    m_val = m;
    M_val = M;
    i_out = mi;
    j_out = Mj;
  };

  for (; iter < max_iter; ++iter) {
    size_t i, j;
    select(i, j);
    if (i == n || j == n || m_val - M_val < opt.tol) {
      converged = true;
      break;
    }
    const float* row_i = gram.row(i, 0);
    const float* row_j = gram.row(j, 1);
    double eta = double(row_i[i]) + double(row_j[j]) - 2.0 * double(row_i[j]);
    if (eta < 1e-12) eta = 1e-12;
    double lam = (m_val - M_val) / eta;
    // Feasible step bounds (both are > 0 by the I_up / I_low membership).
    double hi_i = y[i] == 1 ? C - alpha[i] : alpha[i];
    double hi_j = y[j] == 1 ? alpha[j] : C - alpha[j];
    lam = std::min(lam, std::min(hi_i, hi_j));
    if (!(lam > 0.0)) {
      break;  // numerically stuck; report non-convergence
    }
    alpha[i] = std::clamp(alpha[i] + double(y[i]) * lam, 0.0, C);
    alpha[j] = std::clamp(alpha[j] - double(y[j]) * lam, 0.0, C);
    for (size_t t = 0; t < n; ++t) {
      G[t] += double(y[t]) * lam * (double(row_i[t]) - double(row_j[t]));
    }
    if (opt.observer) {
      double obj = 0.0;
      for (size_t t = 0; t < n; ++t) obj += alpha[t] * (1.0 - G[t]);
      opt.observer(iter, 0.5 * obj);
    }
  }
  if (!converged) {
    size_t i, j;
    select(i, j);  // refresh m/M for the violation report
    (void)i;
    (void)j;
  }

  // Bias from the free support vectors (for them b = -y_t * G_t exactly);
  // with none free, center between the selection bounds. A fully saturated
  // side leaves one bound infinite, in which case the other bound is used.
  double bias;
  {
    double sum = 0.0;
    size_t free_count = 0;
    for (size_t t = 0; t < n; ++t) {
      if (alpha[t] > 0.0 && alpha[t] < C) {
        sum += -double(y[t]) * G[t];
        ++free_count;
      }
    }
    if (free_count > 0) {
      bias = sum / double(free_count);
    } else {
      double lo = std::isfinite(M_val) ? M_val : 0.0;
      double hi = std::isfinite(m_val) ? m_val : lo;
      if (!std::isfinite(M_val)) lo = hi;
      bias = -(hi + lo) / 2.0;
    }
  }
  if (!std::isfinite(m_val) || !std::isfinite(M_val)) {
    m_val = M_val = 0.0;  // one side saturated: no violating pair exists
  }

  SvmBinaryModel model;
  model.dim = X.dim;
  model.kernel = opt.kernel;
  model.C = C;
  model.converged = converged;
  model.iterations = iter;
  model.kkt_violation = m_val - M_val;
  model.bias = float(bias);
  for (size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.alphas.push_back(float(alpha[t]));
      model.signs.push_back(int8_t(y[t]));
      const float* r = X.row(t);
      model.support_vectors.insert(model.support_vectors.end(), r, r + X.dim);
    }
  }
  return model;
}

// Dual objective of a trained model evaluated from scratch; used by tests to
// compare against an independent QP solution.
inline double svm_dual_objective(const SvmBinaryModel& m) {
  size_t ns = m.n_support();
  double obj = 0.0;
  for (size_t i = 0; i < ns; ++i) obj += double(m.alphas[i]);
  double quad = 0.0;
  for (size_t i = 0; i < ns; ++i) {
    for (size_t j = 0; j < ns; ++j) {
      quad += double(m.alphas[i]) * double(m.alphas[j]) * double(m.signs[i]) *
              double(m.signs[j]) *
              kernel_eval(m.kernel, m.support_vectors.data() + i * m.dim,
                          m.support_vectors.data() + j * m.dim, m.dim);
    }
  }
  return obj - 0.5 * quad;
}

}  // namespace lensless
