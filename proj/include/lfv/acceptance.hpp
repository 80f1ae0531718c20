#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lfv {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    unsigned workers = 1;
    std::uint64_t seed = 20240601;
    std::vector<int> only;        ///< empty: every criterion
    std::string scratch_dir = "acceptance_out";
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);
std::string format_result(const CriterionResult& r);

}  // namespace lfv
