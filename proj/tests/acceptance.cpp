// Full-size acceptance run: one line per criterion, nonzero exit on failure.

#include <iostream>

#include "isospec/acceptance.hpp"

int main() {
  isospec::acceptance::Options opt;
  opt.report_timing = true;
  opt.data_dir = ISOSPEC_DATA_DIR;
  int failed = 0;
  for (int id = 1; id <= 10; ++id) {
    const auto r = isospec::acceptance::run_criterion(id, opt);
    std::cout << isospec::acceptance::format_line(r) << std::endl;
    if (!r.passed) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
