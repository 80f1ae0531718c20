#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lfv/config.hpp"
#include "lfv/point_process.hpp"
#include "lfv/stats.hpp"

namespace lfv {

std::string code_version();

/**
 * Runs fn(i) for i in [0, n) on `workers` threads and returns the results in index
 * order, whatever order they finish in.  The first exception is rethrown.
 */
template <class T>
std::vector<T> parallel_map(std::size_t n, unsigned workers, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(n);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

unsigned default_workers();

/** One replicate of the configured model, seeded by the caller. */
using Runner = std::function<Trajectory(Rng&)>;
Runner make_runner(const RunConfig& cfg);

/** Trajectories in replicate order; replicate i uses derive_seed(base_seed, i). */
std::vector<Trajectory> run_replicates(const RunConfig& cfg, unsigned workers);

/** The configured observable of one trajectory. */
const std::vector<double>& observable(const RunConfig& cfg, const Trajectory& tr);

struct RunReport {
    std::string model;
    std::vector<double> times;
    std::vector<EnsembleSummary> rows;
    std::size_t stopped = 0;  ///< replicates that hit their guard
    nlohmann::json verdicts = nlohmann::json::object();
    std::string config_hash;
    std::uint64_t base_seed = 0;
    std::string version;
    nlohmann::json config;  ///< round-trips through parse_config
};

/** Per-time summaries; each row needs at least two replicates, else se/var are zero. */
RunReport build_report(const RunConfig& cfg, const std::vector<Trajectory>& runs);
RunReport simulate(const RunConfig& cfg, unsigned workers);

std::string report_csv(const RunReport& r);
nlohmann::json report_json(const RunReport& r);
std::string plot_script(const std::string& csv_name);

/** Writes run.csv, report.json and plot.py into `dir`. */
void write_report(const RunReport& r, const std::string& dir);

struct CompareResult {
    double t = 0.0;
    KsResult ks;
    EnsembleSummary a, b;
    double alpha = 0.01;
    bool ks_pass = false;
    bool mean_pass = false;  ///< |mean_a - mean_b| within 3 combined SE
    bool pass() const { return ks_pass && mean_pass; }
};

/** KS and mean comparison of the final-time marginals. */
CompareResult compare_marginals(std::span<const double> a, std::span<const double> b, double t, double alpha = 0.01);
CompareResult compare(const RunConfig& a, const RunConfig& b, unsigned workers, double alpha = 0.01);

/**
 * Conditionally-Poisson check of the final level configurations of an lfvsfe-lookdown
 * ensemble: all levels, whatever their type, against the constant intensity K.
 */
CoxDiagnostic diagnose_poisson(const RunConfig& cfg, unsigned workers);

}  // namespace lfv
