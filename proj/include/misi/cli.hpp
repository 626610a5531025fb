#pragma once

#include <iosfwd>
#include <vector>

namespace misi {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumeric = 2, kExitIo = 3 };

struct MieCheckOptions {
  double eps_r = 2.0;
  double radius = 0.25;
  double freq = 0.3e9;
  std::size_t grid = 128;
  double tolerance = 0.02;
};

struct MieCheckReport {
  double rel_error = 0.0;
  double mie_norm = 0.0;
  bool pass = false;
};

/// Integral-equation receiver data for a centred homogeneous cylinder against the analytic series.
MieCheckReport mie_check(const MieCheckOptions& opts);

/// Entry point of the misi command-line tool. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace misi
