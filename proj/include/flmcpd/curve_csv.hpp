#pragma once

#include "flmcpd/fda_core.hpp"

#include <filesystem>
#include <iosfwd>

namespace flmcpd {

// Curve CSV: a header line of grid points t_0,...,t_{G-1}, then one curve
// per line. Values are written in shortest round-trip form, so reading a
// written file reproduces every double bit for bit.

FunctionalSample read_curves(std::istream& in);
FunctionalSample read_curves(const std::filesystem::path& path);

void write_curves(std::ostream& out, const Grid& grid, const Eigen::MatrixXd& rows);
void write_curves(const std::filesystem::path& path, const Grid& grid, const Eigen::MatrixXd& rows);

}  // namespace flmcpd
