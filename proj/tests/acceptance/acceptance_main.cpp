#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <vector>

#include "waveinv/acceptance.hpp"
#include "waveinv/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks, one PASS/FAIL line per criterion"};
  std::vector<int> ids;
  std::uint64_t seed = 1;
  std::filesystem::path scratch = std::filesystem::temp_directory_path() / "waveinv_acceptance";
  std::filesystem::path csv;
  app.add_option("-c,--criterion", ids, "criteria to run (default: all)")->check(CLI::Range(1, waveinv::kCriteria));
  app.add_option("--seed", seed, "seed for random samples");
  app.add_option("--scratch", scratch, "directory for temporary outputs");
  app.add_option("--csv", csv, "also write the results table here");
  CLI11_PARSE(app, argc, argv);

  if (ids.empty()) {
    for (int k = 1; k <= waveinv::kCriteria; ++k) ids.push_back(k);
  }
  // a private scratch directory per invocation keeps parallel ctest runs apart
  std::string tag;
  for (int id : ids) tag += "_" + std::to_string(id);
  scratch /= "run" + tag;
  const auto results = waveinv::run_acceptance(ids, scratch, seed, 1);
  std::filesystem::remove_all(scratch);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s\n", waveinv::format_result_line(r).c_str());
    failed += r.pass ? 0 : 1;
  }
  if (!csv.empty()) waveinv::write_acceptance_csv(csv, results);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
