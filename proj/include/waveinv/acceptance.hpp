#pragma once

// Acceptance checks: each criterion runs a small end-to-end scenario and
// compares the measured quantities with fixed thresholds.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace waveinv {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;  // measured values, deterministic formatting
};

constexpr int kCriteria = 17;

std::string criterion_title(int id);

/// scratch is a private directory for criteria that write files.
CriterionResult run_criterion(int id, const std::filesystem::path& scratch, std::uint64_t seed = 1);

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const std::filesystem::path& scratch,
                                            std::uint64_t seed = 1, int workers = 1);

/// id, title, pass, detail
void write_acceptance_csv(const std::filesystem::path& path, const std::vector<CriterionResult>& results);

std::string format_result_line(const CriterionResult& r);

}  // namespace waveinv
