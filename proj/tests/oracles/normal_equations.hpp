#pragma once

// Two-parameter least squares y - m_bar = b0 + b2 (m - m_bar) solved from
// the 2 x 2 normal equations by Cramer's rule.

#include <cstddef>
#include <vector>

namespace oracle {

struct LineFit {
  double b0 = 0.0;
  double b2 = 0.0;
  double s2 = 0.0;
};

inline LineFit centered_line_fit(const std::vector<double>& y, const std::vector<double>& m) {
  const std::size_t n = y.size();
  double m_bar = 0.0;
  for (double v : m) m_bar += v;
  m_bar /= static_cast<double>(n);

  double s1 = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = m[i] - m_bar;
    const double t = y[i] - m_bar;
    s1 += 1.0;
    sx += x;
    sxx += x * x;
    sy += t;
    sxy += x * t;
  }
  const double det = s1 * sxx - sx * sx;
  LineFit f;
  f.b0 = (sy * sxx - sx * sxy) / det;
  f.b2 = (s1 * sxy - sx * sy) / det;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (y[i] - m_bar) - f.b0 - f.b2 * (m[i] - m_bar);
    rss += e * e;
  }
  f.s2 = rss / static_cast<double>(n - 2);
  return f;
}

}  // namespace oracle
