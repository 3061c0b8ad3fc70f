// Acceptance gate: one PASS/FAIL line per criterion.

#include <iostream>

#include "fradiff/acceptance.hpp"

int main() {
    bool all = true;
    for (const auto& r : fradiff::acceptance::run_all()) {
        std::cout << fradiff::acceptance::format_result(r) << std::endl;
        all = all && r.passed;
    }
    return all ? 0 : 1;
}
