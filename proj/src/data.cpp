#include "bprocova/data.hpp"

#include "bprocova/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace bprocova {

namespace {

bool all_equal(const std::vector<double>& xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

void require_finite(double x, const char* field, std::size_t row) {
  if (!std::isfinite(x)) {
    throw NonFinite(std::string(field) + " is not finite at subject " + std::to_string(row));
  }
}

void check_trial_fields(const TrialDataset& trial) {
  for (std::size_t i = 0; i < trial.size(); ++i) {
    const auto& s = trial.subjects[i];
    require_finite(s.outcome, "outcome", i);
    require_finite(s.prognostic_score, "prognostic score", i);
    if (s.treatment != 0 && s.treatment != 1) {
      throw ValidationError("treatment must be 0 or 1 at subject " + std::to_string(i));
    }
  }
}

void check_trial_rank(const TrialDataset& trial) {
  const auto& subj = trial.subjects;
  if (subj.size() < 3) {
    throw RankDeficient("at least 3 subjects are needed for a rank-3 design");
  }
  const bool constant_w = std::all_of(subj.begin(), subj.end(), [&](const SubjectRecord& s) {
    return s.treatment == subj.front().treatment;
  });
  if (constant_w) {
    throw RankDeficient("all subjects share one treatment arm");
  }
  const bool constant_m = std::all_of(subj.begin(), subj.end(), [&](const SubjectRecord& s) {
    return s.prognostic_score == subj.front().prognostic_score;
  });
  if (constant_m) {
    throw RankDeficient("prognostic scores are all equal");
  }
}

// ---- CSV -------------------------------------------------------------------

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

double parse_number(const std::string& raw, const std::string& column, std::size_t row) {
  const std::string s = trim(raw);
  if (s.empty()) {
    throw ParseError("missing value in column '" + column + "' at row " + std::to_string(row));
  }
  double value = 0.0;
  const char* first = s.data();
  if (*first == '+') {
    ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("malformed number '" + s + "' in column '" + column + "' at row " +
                     std::to_string(row));
  }
  if (!std::isfinite(value)) {
    throw ValidationError("non-finite value in column '" + column + "' at row " +
                          std::to_string(row));
  }
  return value;
}

struct CsvTable {
  std::unordered_map<std::string, std::size_t> index;
  std::size_t width = 0;
  std::vector<std::vector<std::string>> rows;  // data rows, header excluded
};

CsvTable read_table(const std::string& text, const std::vector<std::string>& required) {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  bool have_header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (!have_header) {
      // Strip a UTF-8 byte-order mark.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
        line.erase(0, 3);
      }
      if (trim(line).empty()) {
        continue;
      }
      const auto names = split_fields(line);
      for (std::size_t j = 0; j < names.size(); ++j) {
        table.index.emplace(trim(names[j]), j);
      }
      table.width = names.size();
      have_header = true;
      continue;
    }
    ++row;
    if (trim(line).empty()) {
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != table.width) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(table.width));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) {
    throw ParseError("empty file: no header row");
  }
  for (const auto& name : required) {
    if (!table.index.contains(name)) {
      throw ParseError("missing column '" + name + "'");
    }
  }
  if (table.rows.empty()) {
    throw ParseError("no data rows");
  }
  return table;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void validate(const TrialDataset& trial) {
  if (trial.size() < 4) {
    throw ValidationError("trial needs at least 4 subjects, got " + std::to_string(trial.size()));
  }
  check_trial_fields(trial);
  check_trial_rank(trial);
  // Full rank also excludes scores that are an affine function of treatment.
  const DesignMatrix d = build_design(trial);
  (void)d;
}

void validate(const HistoricalDataset& hist) {
  if (hist.outcomes.size() != hist.prognostic_scores.size()) {
    throw ValidationError("historical outcomes and scores differ in length");
  }
  if (hist.size() < 4) {
    throw ValidationError("historical data needs at least 4 subjects, got " +
                          std::to_string(hist.size()));
  }
  for (std::size_t i = 0; i < hist.size(); ++i) {
    require_finite(hist.outcomes[i], "historical outcome", i);
    require_finite(hist.prognostic_scores[i], "historical prognostic score", i);
  }
  if (all_equal(hist.prognostic_scores)) {
    throw RankDeficient("historical prognostic scores are all equal");
  }
}

DesignMatrix build_design(const TrialDataset& trial) {
  check_trial_fields(trial);
  check_trial_rank(trial);

  const auto n = static_cast<Eigen::Index>(trial.size());
  double m_sum = 0.0;
  for (const auto& s : trial.subjects) {
    m_sum += s.prognostic_score;
  }
  DesignMatrix d;
  d.m_bar = m_sum / static_cast<double>(n);
  d.V.resize(n, 3);
  d.y_centered.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = trial.subjects[static_cast<std::size_t>(i)];
    d.V(i, 0) = 1.0;
    d.V(i, 1) = static_cast<double>(s.treatment);
    d.V(i, 2) = s.prognostic_score - d.m_bar;
    d.y_centered(i) = s.outcome - d.m_bar;
  }
  d.gram = d.V.transpose() * d.V;
  d.vt_y = d.V.transpose() * d.y_centered;
  d.yt_y = d.y_centered.squaredNorm();

  // Columns are scaled to unit norm so the rank threshold is scale free.
  const Eigen::Vector3d norms = d.V.colwise().norm().transpose();
  const Eigen::MatrixX3d scaled = d.V * norms.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw RankDeficient("design matrix (1, w, m - m_bar) has rank " + std::to_string(qr.rank()));
  }
  return d;
}

TrialDataset parse_trial_csv(const std::string& text, const CsvColumns& columns) {
  const auto table = read_table(text, {columns.outcome, columns.treatment, columns.score});
  const auto iy = table.index.at(columns.outcome);
  const auto iw = table.index.at(columns.treatment);
  const auto im = table.index.at(columns.score);

  TrialDataset trial;
  trial.subjects.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const std::size_t row = r + 1;
    SubjectRecord s;
    s.outcome = parse_number(f[iy], columns.outcome, row);
    const double w = parse_number(f[iw], columns.treatment, row);
    if (w != 0.0 && w != 1.0) {
      throw ValidationError("treatment must be 0 or 1, got " + trim(f[iw]) + " at row " +
                            std::to_string(row));
    }
    s.treatment = static_cast<int>(w);
    s.prognostic_score = parse_number(f[im], columns.score, row);
    trial.subjects.push_back(s);
  }
  validate(trial);
  return trial;
}

HistoricalDataset parse_historical_csv(const std::string& text, const CsvColumns& columns) {
  const auto table = read_table(text, {columns.outcome, columns.score});
  const auto iy = table.index.at(columns.outcome);
  const auto im = table.index.at(columns.score);

  HistoricalDataset hist;
  hist.outcomes.reserve(table.rows.size());
  hist.prognostic_scores.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    hist.outcomes.push_back(parse_number(f[iy], columns.outcome, r + 1));
    hist.prognostic_scores.push_back(parse_number(f[im], columns.score, r + 1));
  }
  validate(hist);
  return hist;
}

TrialDataset load_trial_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  return parse_trial_csv(slurp(path), columns);
}

HistoricalDataset load_historical_csv(const std::filesystem::path& path,
                                      const CsvColumns& columns) {
  return parse_historical_csv(slurp(path), columns);
}

}  // namespace bprocova
