// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code 0 iff all pass.
#include <chrono>
#include <cstdio>

#include "impact_game/verify.hpp"

int main() {
    using clock = std::chrono::steady_clock;
    bool all_ok = true;
    const auto t0 = clock::now();
    for (const auto& check : impact_game::run_all_checks()) {
        std::printf("[%s] %-4s %s (%s)\n", check.pass ? "PASS" : "FAIL", check.id.c_str(),
                    check.description.c_str(), check.detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && check.pass;
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("%s (%.1fs)\n", all_ok ? "all criteria passed" : "SOME CRITERIA FAILED", secs);
    return all_ok ? 0 : 1;
}
