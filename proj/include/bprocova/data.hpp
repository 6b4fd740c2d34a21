#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace bprocova {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

struct SubjectRecord {
  double outcome = 0.0;
  int treatment = 0;
  double prognostic_score = 0.0;
};

struct TrialDataset {
  std::vector<SubjectRecord> subjects;

  std::size_t size() const noexcept { return subjects.size(); }
};

struct HistoricalDataset {
  std::vector<double> outcomes;
  std::vector<double> prognostic_scores;

  std::size_t size() const noexcept { return outcomes.size(); }
};

/// Regression design on the centered scale: columns (1, w, m - m_bar) and
/// outcomes y - m_bar. The Gram matrix and V'y are cached since every
/// posterior quantity reduces to them plus O(N) residual passes.
struct DesignMatrix {
  Eigen::MatrixX3d V;
  Eigen::VectorXd y_centered;
  double m_bar = 0.0;

  Matrix3 gram;      // V'V
  Vector3 vt_y;      // V'y
  double yt_y = 0.0;  // y'y

  Eigen::Index rows() const noexcept { return V.rows(); }
};

/// Throws NonFinite / ValidationError / RankDeficient when the dataset
/// cannot support the three-column regression (N >= 4, both arms present,
/// non-constant scores).
void validate(const TrialDataset& trial);
void validate(const HistoricalDataset& hist);

DesignMatrix build_design(const TrialDataset& trial);

/// Column names used by the CSV loaders; remappable from the CLI.
struct CsvColumns {
  std::string outcome = "y";
  std::string treatment = "w";
  std::string score = "m";
};

TrialDataset load_trial_csv(const std::filesystem::path& path, const CsvColumns& columns = {});
HistoricalDataset load_historical_csv(const std::filesystem::path& path,
                                      const CsvColumns& columns = {});

TrialDataset parse_trial_csv(const std::string& text, const CsvColumns& columns = {});
HistoricalDataset parse_historical_csv(const std::string& text, const CsvColumns& columns = {});

}  // namespace bprocova
