#pragma once

// Derivative-free minimisation used by the likelihood fits: Nelder-Mead with
// a relative-size stopping rule, and golden-section search for 1-d profiles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace eot {

struct NelderMeadResult {
  std::vector<double> x;
  double fmin = 0.0;
  bool converged = false;
  int evals = 0;
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double step_rel = 0.25,
                                    double tol_rel = 1e-8, int max_evals = 4000) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> xs(dim + 1, x0);
  std::vector<double> fs(dim + 1);
  for (std::size_t i = 1; i <= dim; ++i)
    xs[i][i - 1] += step_rel * std::max(std::fabs(x0[i - 1]), 1.0);

  int evals = 0;
  for (auto i = 0u; i <= dim; ++i) fs[i] = (++evals, f(xs[i]));

  auto order = [&]() {
    std::vector<std::size_t> idx(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<std::vector<double>> nxs(dim + 1);
    std::vector<double> nfs(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
      nxs[i] = xs[idx[i]];
      nfs[i] = fs[idx[i]];
    }
    xs.swap(nxs);
    fs.swap(nfs);
  };

  NelderMeadResult res;
  while (evals < max_evals) {
    order();

    double spread_x = 0.0;
    for (std::size_t i = 1; i <= dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        spread_x = std::max(spread_x,
                            std::fabs(xs[i][j] - xs[0][j]) / (1.0 + std::fabs(xs[0][j])));
    const double spread_f = std::fabs(fs[dim] - fs[0]) / (1.0 + std::fabs(fs[0]));
    if (spread_x < tol_rel && spread_f < tol_rel) {
      res.converged = true;
      break;
    }

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += xs[i][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double coeff) {
      std::vector<double> p(dim);
      for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + coeff * (centroid[j] - xs[dim][j]);
      return p;
    };

    const auto xr = blend(1.0);
    const double fr = (++evals, f(xr));
    if (fr < fs[0]) {
      const auto xe = blend(2.0);
      const double fe = (++evals, f(xe));
      if (fe < fr) {
        xs[dim] = xe;
        fs[dim] = fe;
      } else {
        xs[dim] = xr;
        fs[dim] = fr;
      }
    } else if (fr < fs[dim - 1]) {
      xs[dim] = xr;
      fs[dim] = fr;
    } else {
      const bool outside = fr < fs[dim];
      const auto xc = blend(outside ? 0.5 : -0.5);
      const double fc = (++evals, f(xc));
      if (fc < (outside ? fr : fs[dim])) {
        xs[dim] = xc;
        fs[dim] = fc;
      } else {
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t j = 0; j < dim; ++j) xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
          fs[i] = (++evals, f(xs[i]));
        }
      }
    }
  }
  order();
  res.x = xs[0];
  res.fmin = fs[0];
  res.evals = evals;
  return res;
}

// Golden-section minimisation on [lo, hi]; returns the abscissa.
inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 double tol_rel = 1e-11, int max_iter = 200) {
  const double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < max_iter && (b - a) > tol_rel * (std::fabs(a) + std::fabs(b) + 1.0); ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

}  // namespace eot
