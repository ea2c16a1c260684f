#include "spoofsmith/verify/verify.hpp"

#include <cstdio>
#include <ostream>

namespace spoofsmith {

std::string format_check(const CheckResult& r) {
  char time[32];
  std::snprintf(time, sizeof time, "%.2fs", r.seconds);
  return std::string(r.passed ? "PASS " : "FAIL ") + r.suite + "/" + r.name + "  " + r.detail + "  (" + time + ")";
}

std::vector<CheckResult> run_verification(const VerifyOptions& options, std::ostream& log) {
  std::vector<CheckResult> all;
  for (auto* suite : {&run_gradient_suite, &run_oracle_suite, &run_roundtrip_suite}) {
    for (auto& r : suite(options)) {
      log << format_check(r) << '\n' << std::flush;
      all.push_back(std::move(r));
    }
  }
  return all;
}

}  // namespace spoofsmith
