// verify.hpp — oracle/property checks behind `mimo-scatter verify` and the
// acceptance suite
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mimoscatter/scene.hpp"

namespace mimoscatter {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

/// Names in suite order.
std::vector<std::string> verify_check_names();

/// Run one named check. Checks that operate on a configurable scene use
/// `scene` when given, otherwise a built-in benchmark scene.
CheckResult run_verify_check(const std::string& name, const std::optional<SceneLayout>& scene);

std::vector<CheckResult> run_all_checks(const std::optional<SceneLayout>& scene);

/// Built-in benchmark scenes (also exercised by the test suites).
SceneLayout bench_basic();     // 2 TX, 2 RX, 2 scatterers, conducting antennas
SceneLayout bench_lossless();  // same geometry, sigma = 0 everywhere
SceneLayout bench_pair();      // 1 TX, 1 RX, no scatterers
SceneLayout bench_born();      // 1 TX, 1 RX, 2 weak scatterers
SceneLayout bench_far();       // far scatterers for the spread checks

}  // namespace mimoscatter
