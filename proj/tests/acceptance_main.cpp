#include <cstdio>

#include "fmpols/acceptance.hpp"

int main() {
  int failed = 0;
  for (const auto& r : fmpols::run_acceptance()) {
    std::printf("%s\n", fmpols::format_result(r).c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  std::printf("%d of 13 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
