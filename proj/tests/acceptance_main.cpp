#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <string>
#include <thread>

#include "lfv/acceptance.hpp"

int main(int argc, char** argv) {
    lfv::AcceptanceOptions opt;
    opt.workers = std::max(1u, std::thread::hardware_concurrency());
    for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
    if (const char* dir = std::getenv("LFV_SCRATCH")) opt.scratch_dir = dir;
    bool all = true;
    for (const auto& r : lfv::run_acceptance(opt)) {
        std::printf("%s\n", lfv::format_result(r).c_str());
        std::fflush(stdout);
        all = all && r.pass;
    }
    return all ? 0 : 1;
}
