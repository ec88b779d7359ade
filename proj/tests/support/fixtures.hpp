#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "tradediff/economy.hpp"
#include "tradediff/scenario.hpp"
#include "tradediff/static_eq.hpp"

namespace tradediff::testing {

struct RandomEconomyOptions {
    std::size_t regions = 3;
    std::size_t sectors = 2;
    bool intermediates = true;
    bool tariffs = true;
    bool imbalances = true;
    bool general_elasticities = true;  ///< false: nu = 1, rho = mu = 0
    std::size_t horizon = 3;
};

/// An economy drawn directly in parameter space, anchored at unit base
/// prices. It is a valid model but its base year is not an equilibrium at
/// those anchors.
Economy random_raw_economy(std::mt19937_64& rng, const RandomEconomyOptions& opts = {});

/// Raw economy solved once, turned into flows and recalibrated, so the base
/// year reproduces the flows.
struct CalibratedCase {
    Economy raw;
    BaselineFlows flows;
    Economy economy;
};
CalibratedCase random_calibrated_economy(std::uint64_t seed, const RandomEconomyOptions& opts = {});
CalibratedCase calibrate_raw(const Economy& raw);

/// The bundled four-region, three-sector toy economy.
std::filesystem::path data_dir();
Economy toy_economy();
PolicyShock toy_preset(const std::string& name);

/// Solver settings used throughout the tests.
SolverOptions tight_solver();

}  // namespace tradediff::testing
