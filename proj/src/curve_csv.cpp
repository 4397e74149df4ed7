#include "flmcpd/curve_csv.hpp"

#include "flmcpd/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace flmcpd {

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_number) {
  std::vector<double> row;
  const char* cursor = line.data();
  const char* end = line.data() + line.size();
  while (end > cursor && (end[-1] == '\r' || end[-1] == ' ')) --end;
  while (true) {
    while (cursor < end && *cursor == ' ') ++cursor;
    double value = 0.0;
    auto [next, ec] = std::from_chars(cursor, end, value);
    if (ec != std::errc() || !std::isfinite(value)) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_number) + ", field " +
                      std::to_string(row.size() + 1) + ": not a finite number");
    }
    row.push_back(value);
    cursor = next;
    while (cursor < end && *cursor == ' ') ++cursor;
    if (cursor == end) break;
    if (*cursor != ',') {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_number) + ": expected ',' separator");
    }
    ++cursor;
  }
  return row;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \r\t") == std::string::npos;
}

}  // namespace

FunctionalSample read_curves(std::istream& in) {
  std::string line;
  std::size_t line_number = 0;
  std::vector<double> header;
  while (std::getline(in, line)) {
    ++line_number;
    if (blank(line)) continue;
    if (line_number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    header = parse_row(line, line_number);
    break;
  }
  if (header.empty()) throw Error(ErrorKind::ParseError, "missing grid header");
  if (header.size() < 3) throw Error(ErrorKind::ParseError, "grid header needs at least 3 points");

  const Grid grid = Grid::uniform(header.size());
  for (std::size_t a = 0; a < header.size(); ++a) {
    if (std::abs(header[a] - grid.points()[static_cast<Eigen::Index>(a)]) > 1e-9) {
      throw Error(ErrorKind::ParseError, "grid header is not the uniform grid on [0,1] (point " +
                                             std::to_string(a) + ")");
    }
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_number;
    if (blank(line)) continue;
    auto row = parse_row(line, line_number);
    if (row.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_number) + " has " +
                                             std::to_string(row.size()) + " values, expected " +
                                             std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::InsufficientData, "file contains no curves");

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (std::size_t a = 0; a < header.size(); ++a) {
      values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(a)) = rows[n][a];
    }
  }
  return FunctionalSample(grid, std::move(values));
}

FunctionalSample read_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_curves(in);
}

namespace {

void write_value(std::ostream& out, double value) {
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  out.write(buffer, end - buffer);
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index a = 0; a < row.size(); ++a) {
    if (a > 0) out.put(',');
    write_value(out, row[a]);
  }
  out.put('\n');
}

}  // namespace

void write_curves(std::ostream& out, const Grid& grid, const Eigen::MatrixXd& rows) {
  if (rows.cols() != static_cast<Eigen::Index>(grid.size())) {
    throw Error(ErrorKind::DimensionMismatch, "rows do not match grid size");
  }
  write_row(out, grid.points().transpose());
  for (Eigen::Index n = 0; n < rows.rows(); ++n) write_row(out, rows.row(n));
}

void write_curves(const std::filesystem::path& path, const Grid& grid, const Eigen::MatrixXd& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_curves(out, grid, rows);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace flmcpd
