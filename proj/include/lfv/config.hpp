#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfv/environment.hpp"
#include "lfv/limit_lookdown.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/probe.hpp"
#include "lfv/projected.hpp"
#include "lfv/scaling.hpp"
#include "lfv/spatial.hpp"

namespace lfv {

enum class Model {
    LfvsfeLookdown,
    LfvsfeProjected,
    Feller,
    FellerRe,
    KrFeller,
    KrFellerRe,
    BbmreDirect,
    BbmreLookdown,
    SbmreLookdown,
    Slfvfs,
    SlfvfsLookdown,
    MytnikBrw,
};

Model parse_model(const std::string& name);
std::string model_name(Model m);

struct RunConfig {
    Model model = Model::Feller;
    std::size_t replicates = 1;
    double horizon = 1.0;
    double record_every = 0.1;
    std::uint64_t base_seed = 0;
    std::string output_dir = "out";
    int observable = -1;  ///< -1: total mass; otherwise probe index

    ScalingSchedule schedule;
    double N = 1000.0;
    SelectionSpec selection;

    double x0 = 1.0;
    double ceiling = 20.0;
    std::optional<double> guard;  ///< absent: default guard

    DiffusionParams diffusion;
    double dt = 1e-3;
    LimitParams limit;
    std::size_t max_particles = 1'000'000;

    EnvSpec env;
    std::optional<int> frozen_env;
    Grid grid;
    Probe initial;
    std::vector<Probe> probes;

    std::size_t mytnik_n = 1000;
    double mytnik_coupling = 0.5;

    nlohmann::json source;  ///< canonical form of the parsed file
};

/** Strict parse: unknown or model-irrelevant keys throw ConfigError. */
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

Probe parse_probe(const nlohmann::json& j, int dim);

/** FNV-1a 64 of the canonical JSON text without output_dir, as 16 hex digits. */
std::string config_hash(const nlohmann::json& j);

}  // namespace lfv
