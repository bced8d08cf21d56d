// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Thresholds live in the check implementations.
#include <cstdio>
#include <optional>

#include "mimoscatter/verify.hpp"

int main() {
  const auto names = mimoscatter::verify_check_names();
  bool all = true;
  int idx = 1;
  for (const auto& name : names) {
    const auto r = mimoscatter::run_verify_check(name, std::nullopt);
    std::printf("[%d/%zu] %-18s %s  (%s)  [%.1f s]\n", idx++, names.size(), r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.details.c_str(), r.seconds);
    std::fflush(stdout);
    all = all && r.pass;
  }
  return all ? 0 : 1;
}
