#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spoofsmith {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::size_t gradient_cases = 200;
  std::size_t auc_sets = 500;
  std::uint64_t seed = 0;
  /// Working directory for round-trip files; a fresh temp dir when empty.
  std::filesystem::path scratch_dir;
};

std::vector<CheckResult> run_gradient_suite(const VerifyOptions& options);
std::vector<CheckResult> run_oracle_suite(const VerifyOptions& options);
std::vector<CheckResult> run_roundtrip_suite(const VerifyOptions& options);

/// All three suites; each result is echoed to `log` as it completes.
std::vector<CheckResult> run_verification(const VerifyOptions& options, std::ostream& log);

std::string format_check(const CheckResult& result);

}  // namespace spoofsmith
