#pragma once

#include "mstab/cauchy.hpp"
#include "mstab/reconstruct.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mstab {

struct ExperimentConfig {
    double L = 3.0;
    int N = 40;
    double omega_side = 1.0;
    BallPair balls{};
    /// 0 means the measured admissibility bound of the family
    double M = 0.0;
    double eps = 0.5;
    double r = kRInf;
    double A_amp = 0.5, q_amp = 0.5;
    /// amplitudes of the perturbation directions dA, dq
    double dA_amp = 0.2, dq_amp = 0.2;
    std::vector<double> t_values{1.0, 0.5, 0.25, 0.125};
    /// fixed h per sweep point; empty selects the schedule
    std::vector<double> h_values;
    double lambda = 1.0;
    double theta = 0.5;
    double besov_delta = 0.0;
    /// 0 fits c' on the calibration family
    double c_prime = 0.0;
    double c_tilde = 1.0;
    int K = 50;
    std::uint64_t seed = 1;
    std::uint64_t holdout_seed = 2;
    ExtractMode mode = ExtractMode::Interior;
    DistOptions dist{};
    int threads = 0;
    std::string out_dir = "mstab_out";

    /// @throws Error naming the first parameter outside its range
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/**
 * Pair file: JSON header {"format": "mstab-pair", "A", "q", "omega_side", "M", "eps", "r"}
 * where A and q name CGOF files relative to the header.
 */
void save_pair(const std::string& path, const PotentialPair& P);
/// @param grid reused when its (L, N) match the stored fields
PotentialPair load_pair(const std::string& path, const GridPtr& grid = nullptr);

/// Base pair and perturbation directions; P2(t) = (A + t dA, q + t dq).
struct Family {
    PotentialPair base;
    VectorField dA;
    ScalarField dq;

    PotentialPair at(double t) const;
};

Family make_family(const GridPtr& g, const ExperimentConfig& c, std::uint64_t seed);

struct SweepRow {
    double t = 0.0, dist = 0.0;
    double dA_Hm1_direct = 0.0, dA_Hm1_bound = 0.0;
    double dA_Besov_direct = 0.0, dA_Besov_bound = 0.0;
    double q_Hlambda_direct = 0.0, q_Hlambda_bound = 0.0;
    double q_Besov0_direct = 0.0, q_Besov0_bound = 0.0;
    double h_used = 0.0, rho_used = 0.0;
    int k_used = 0;
};

std::vector<std::string> sweep_columns();
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct SweepPoint {
    SweepRow row;
    StabilityInputs inputs;
    StabilitySection dA, q;
    DistResult dist;
    double coexact_share = 0.0;
};

struct FamilyRun {
    std::uint64_t seed = 0;
    double M = 0.0;
    std::vector<SweepPoint> points;
};

struct FittedConstants {
    double c_prime = 1.0;
    double h0 = 1.0;
    ErrorModel dA_model{1.0, 0.0, 1};
    ErrorModel q_model{1.0, 0.0, 0};
};

struct ExperimentResult {
    FittedConstants fitted;
    FamilyRun calibration, holdout;
    bool dist_monotone = false;
    bool bounds_hold = false;
    nlohmann::json manifest;
};

/// Cauchy data, dist, gauge data and both stability sections for every t of the family.
FamilyRun run_family(const ExperimentConfig& c, const GridPtr& g, std::uint64_t seed, const FittedConstants& fc,
                     const std::string& cauchy_dir = "");

/**
 * Fits c', then the error models, on the calibration family and verifies the frozen constants on the held-out
 * family. Writes manifest.json, config.json, report.json, sweep.csv, calibration.csv, fields/, cauchy/ and dat/
 * under c.out_dir; a failing stage is recorded in the manifest and the outputs written so far are kept.
 */
ExperimentResult run_experiment(const ExperimentConfig& c);

nlohmann::json report_json(const ExperimentConfig& c, const ExperimentResult& r);
nlohmann::json record_json(const ExtractionRecord& r);
nlohmann::json section_json(const StabilitySection& s);

} // namespace mstab
