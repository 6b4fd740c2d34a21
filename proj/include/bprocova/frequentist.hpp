#pragma once

#include "bprocova/data.hpp"

#include <string>

namespace bprocova {

enum class HcVariant { HC0, HC1, HC3 };

std::string to_string(HcVariant v);
HcVariant parse_hc_variant(const std::string& name);

/// OLS of y on (1, w, m) with uncentered scores.
struct OlsFit {
  Vector3 coefficients = Vector3::Zero();
  Matrix3 classical_cov = Matrix3::Zero();
  Matrix3 hc_cov = Matrix3::Zero();
  Eigen::VectorXd residuals;
  double s_sq = 0.0;
  int n = 0;
  HcVariant variant = HcVariant::HC1;

  double beta1() const { return coefficients(1); }
  double hc_se_beta1() const;
  double classical_se_beta1() const;
};

/// Sandwich weights a_i: 1 (HC0), N/(N-3) (HC1), (1 - h_ii)^-2 (HC3).
OlsFit procova_fit(const TrialDataset& trial, HcVariant variant = HcVariant::HC1);

struct WaldResult {
  double lower = 0.0;
  double upper = 0.0;
  double critical = 0.0;  // t_{N-3, 1 - alpha/2}
  bool reject = false;
};

/// beta1_hat +/- t_{N-3, 1-alpha/2} * HC SE; rejects when 0 lies outside.
WaldResult procova_ci_and_test(const OlsFit& fit, double alpha = 0.05);

}  // namespace bprocova
