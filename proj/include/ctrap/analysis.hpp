#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctrap {

/// Bad input data: rank-deficient design, unusable file contents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened or read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadratic least-squares fit y = c0 + c1 x + c2 x^2 with classical
/// (homoskedastic) inference.
struct FitResult {
  std::array<double, 3> coefficients{};
  std::array<double, 3> std_errors{};
  std::array<double, 3> t_stats{};
  std::array<double, 3> p_values{};
  double r_squared = 0.0;
  int n_obs = 0;
};

/// Householder QR on the centered design [1, x - mean, (x - mean)^2], mapped
/// back to the raw basis. Throws std::invalid_argument on length mismatch or
/// fewer than 4 points, DataError when the design is rank deficient.
FitResult ols_quadratic(std::span<const double> xs, std::span<const double> ys);

struct CountryRecord {
  std::string country_id;
  double inventory_days = 0.0;
  double eci = 0.0;
};

struct CountryColumns {
  std::string id = "country";
  std::string inventory = "inventory_days";
  std::string eci = "eci";
};

struct CountryData {
  std::vector<CountryRecord> records;
  int skipped_rows = 0;
};

/// Reads a comma-separated file with a header row. Rows whose inventory or
/// ECI cell is blank, non-numeric, non-finite, or (for inventory) negative
/// are skipped and counted. Throws IoError when the file cannot be read and
/// DataError when a column is missing or every row is skipped.
CountryData load_country_csv(const std::filesystem::path& path,
                             const CountryColumns& columns = {});

struct InvertedUReport {
  FitResult fit;
  bool is_inverted_u = false;
};

InvertedUReport inverted_u_report(std::span<const double> complexity,
                                  std::span<const double> response);
InvertedUReport inverted_u_report(const std::vector<CountryRecord>& records);

/// Splits one CSV line into fields; handles double-quoted fields with ""
/// escapes.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace ctrap
