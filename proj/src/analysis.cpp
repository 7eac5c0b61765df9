#include "ctrap/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "ctrap/numerics.hpp"

namespace ctrap {

FitResult ols_quadratic(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("ols_quadratic: xs and ys differ in length");
  }
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < 4) throw std::invalid_argument("ols_quadratic: need at least 4 points");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw DataError("ols_quadratic: non-finite input");
    }
  }

  double mu = 0.0;
  for (double x : xs) mu += x;
  mu /= static_cast<double>(n);

  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xc = xs[i] - mu;
    design(i, 0) = 1.0;
    design(i, 1) = xc;
    design(i, 2) = xc * xc;
    y(i) = ys[i];
  }
  // Unit-norm columns make the rank threshold independent of the x scale.
  Eigen::Vector3d norms = design.colwise().norm().transpose();
  for (int j = 0; j < 3; ++j) {
    if (norms(j) == 0.0) throw DataError("ols_quadratic: rank-deficient design");
    design.col(j) /= norms(j);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw DataError("ols_quadratic: rank-deficient design");

  const Eigen::Vector3d scaled = qr.solve(y);
  const Eigen::VectorXd resid = y - design * scaled;
  const double ssr = resid.squaredNorm();
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();

  // (X^T X)^{-1} = P R^{-1} R^{-T} P^T for X P = Q R.
  const Eigen::Matrix3d r =
      qr.matrixR().topLeftCorner(3, 3).triangularView<Eigen::Upper>();
  const Eigen::Matrix3d r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::Matrix3d::Identity());
  const Eigen::Matrix3d perm = qr.colsPermutation().toDenseMatrix().cast<double>();
  const Eigen::Matrix3d xtx_inv = perm * r_inv * r_inv.transpose() * perm.transpose();

  const double sigma2 = ssr / static_cast<double>(n - 3);
  const Eigen::Matrix3d d_inv = norms.cwiseInverse().asDiagonal();
  const Eigen::Vector3d centered = d_inv * scaled;
  const Eigen::Matrix3d cov_centered = sigma2 * d_inv * xtx_inv * d_inv;

  // c0 + c1 (x - mu) + c2 (x - mu)^2 in the raw basis.
  Eigen::Matrix3d to_raw;
  to_raw << 1.0, -mu, mu * mu,
            0.0, 1.0, -2.0 * mu,
            0.0, 0.0, 1.0;
  const Eigen::Vector3d coef = to_raw * centered;
  const Eigen::Matrix3d cov = to_raw * cov_centered * to_raw.transpose();

  FitResult fit;
  fit.n_obs = static_cast<int>(n);
  const int dof = static_cast<int>(n - 3);
  for (int j = 0; j < 3; ++j) {
    fit.coefficients[j] = coef(j);
    fit.std_errors[j] = std::sqrt(std::max(cov(j, j), 0.0));
    if (fit.std_errors[j] > 0.0) {
      fit.t_stats[j] = coef(j) / fit.std_errors[j];
    } else if (coef(j) == 0.0) {
      fit.t_stats[j] = 0.0;
    } else {
      fit.t_stats[j] = std::copysign(std::numeric_limits<double>::infinity(), coef(j));
    }
    fit.p_values[j] =
        std::min(1.0, 2.0 * student_t_sf(std::abs(fit.t_stats[j]), dof).value());
  }
  fit.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;
  return fit;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

CountryData load_country_csv(const std::filesystem::path& path,
                             const CountryColumns& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("malformed header: " + path.string() + " is empty");
  }
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto index_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("malformed header: missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = index_of(columns.id);
  const std::size_t inv_col = index_of(columns.inventory);
  const std::size_t eci_col = index_of(columns.eci);

  CountryData data;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    auto cell = [&](std::size_t c) {
      return c < fields.size() ? fields[c] : std::string();
    };
    const auto inv = parse_number(cell(inv_col));
    const auto eci = parse_number(cell(eci_col));
    if (!inv || !eci || *inv < 0.0) {
      ++data.skipped_rows;
      continue;
    }
    data.records.push_back({trim(cell(id_col)), *inv, *eci});
  }
  if (!in.eof()) throw IoError("read error on " + path.string());
  if (data.records.empty()) {
    throw DataError("no usable rows in " + path.string());
  }
  return data;
}

InvertedUReport inverted_u_report(std::span<const double> complexity,
                                  std::span<const double> response) {
  InvertedUReport report;
  report.fit = ols_quadratic(complexity, response);
  report.is_inverted_u = report.fit.coefficients[2] < 0.0;
  return report;
}

InvertedUReport inverted_u_report(const std::vector<CountryRecord>& records) {
  std::vector<double> x, y;
  x.reserve(records.size());
  y.reserve(records.size());
  for (const auto& r : records) {
    x.push_back(r.eci);
    y.push_back(r.inventory_days);
  }
  return inverted_u_report(x, y);
}

}  // namespace ctrap
