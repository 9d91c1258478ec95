#pragma once

#include "mstab/besov.hpp"
#include "mstab/cgo.hpp"
#include "mstab/forward.hpp"
#include "mstab/hodge.hpp"
#include "mstab/potential.hpp"

#include <array>
#include <string>
#include <vector>

namespace mstab {

struct IdentityCheck {
    /// integral of i(A1-A2).(u1 grad v - v grad u1) + (A1^2-A2^2+q1-q2) u1 v with v = conj u2
    cplx volume = 0.0;
    /// <N_{A1,q1} u1, T v> - conj <N_{conj A2, conj q2} u2, T conj u1>
    cplx boundary = 0.0;
    double gap = 0.0;
    double residual1 = 0.0, residual2 = 0.0;
    /// set when either input fails the interior equation by more than 1e-8
    bool flagged = false;
};

/**
 * Both sides of the boundary-to-interior identity for discrete solutions on the cube.
 * @param u1 solves L_{A1,q1} u1 = 0
 * @param u2 solves L_{conj A2, conj q2} u2 = 0
 */
IdentityCheck integral_identity_check(const PotentialPair& P1, const PotentialPair& P2, const CubeDomain& D,
                                      const std::vector<cplx>& u1, const std::vector<cplx>& u2);

enum class ExtractMode { Interior, Boundary };

struct ExtractOptions {
    ExtractMode mode = ExtractMode::Interior;
    int max_iter = 500;
    double tol = 1e-6;
    BallPair balls{};
};

struct ExtractionRecord {
    Vec3 xi{};
    double h = 0.0;
    ExtractMode mode = ExtractMode::Interior;
    /// pairing values, one per CGO frame
    std::vector<cplx> pairings;
    /// extracted Fourier value(s): three 2-form components for dA, one value for q
    std::vector<cplx> value;
    std::vector<cplx> truth;
    double error = 0.0;
    /// dist and dA-coupling values the record was assembled with
    double dist = 0.0;
    double coupling = 0.0;
    double weight_max = 0.0;
    double remainder = 0.0;
    bool converged = true;
    std::string note;
};

/// Fourier coefficients of d(A1 - A2) at xi, -i(xi_j A_k - xi_k A_j) with A_hat by quadrature.
std::array<cplx, 3> true_dA_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi);
cplx true_q_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi);

/**
 * Estimate of the Fourier coefficients of dA1 - dA2 at xi from two CGO frames, (mu1, mu2) and
 * (mu1, -mu2), which give mu1.A_hat and mu2.A_hat; all (j,k) components follow from these.
 */
ExtractionRecord extract_dA_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi, double h,
                                const ExtractOptions& opt = {});

/**
 * Estimate of (q1 - q2)^(xi) from the gauge-modified pairing with phi from @p G, averaged over
 * both frames. @p G may be null, which means phi = 0.
 */
ExtractionRecord extract_q_hat(const PotentialPair& P1, const PotentialPair& P2, const Vec3& xi, double h,
                               const GaugeData* G, const ExtractOptions& opt = {});

struct ScheduleParams {
    double lambda = 1.0;
    double theta = 0.5;
    /// 0 selects 1 - eps/2
    double besov_delta = 0.0;
    double c_prime = 1.0;
    double c_tilde = 1.0;
    int n = 3;
};

/// Extraction error model C |xi|^p (dist e^{c/h} + h^{eps/(eps+2)}) + C coupling h^{-(eps+4)/(eps+2)}.
struct ErrorModel {
    double C = 1.0;
    double c = 0.0;
    /// 1 for dA, 0 for q
    int xi_power = 1;
    double eval(double xi_norm, double h, double dist, double eps, double coupling = 0.0) const;
};

/// Smallest C (times @p margin) covering every record; c picked from a small grid to keep the bound tight.
ErrorModel fit_error_model(const std::vector<ExtractionRecord>& recs, double eps, int xi_power, double margin = 1.5);

double schedule_h_dA(double dist, const ScheduleParams& s);
double schedule_rho_dA(double h, double eps, const ScheduleParams& s);
double schedule_h_q(double dist, double eps, const ScheduleParams& s);
double schedule_rho_q(double h, double eps, const ScheduleParams& s);

struct StabilitySection {
    double h = 0.0, rho = 0.0, tau = 0.0;
    int k = 0;
    double direct_sobolev = 0.0, bound_sobolev = 0.0;
    double direct_besov = 0.0, bound_besov = 0.0;
    bool besov_skipped = false;
    /// records cover one of each +-eta pair
    bool half = false;
    std::vector<ExtractionRecord> records;
    std::string note;
};

struct StabilityInputs {
    double dist = 0.0;
    double eps = 0.5;
    double r = kRInf;
    double M = 1.0;
    ScheduleParams schedule{};
    ErrorModel dA_model{1.0, 0.0, 1};
    ErrorModel q_model{1.0, 0.0, 0};
    ExtractOptions extract{};
    /// extract only one of each pair +-eta when both potentials are real
    bool use_symmetry = true;
    /// overrides the schedule h when positive
    double h_override = 0.0;
};

/// Extractions over the schedule's frequency set followed by apply_dA_bounds.
StabilitySection assemble_dA_stability(const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in);

/// @param dA_bound the H^{-1} bound from the magnetic section, entering the coupling term
StabilitySection assemble_q_stability(const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in,
                                      const GaugeData* G, double dA_bound);

/// Recomputes direct norms and bounds from the stored records, e.g. after refitting the error model.
void apply_dA_bounds(StabilitySection& S, const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in);
void apply_q_bounds(StabilitySection& S, const PotentialPair& P1, const PotentialPair& P2, const StabilityInputs& in,
                    double dA_bound);

struct StabilityReport {
    StabilityInputs inputs;
    StabilitySection dA, q;
};

/// Lattice frequencies with 0 < |eta| <= radius, one of each +- pair when @p half is set.
std::vector<Vec3> lattice_ball(const Grid& g, double radius, bool half);

} // namespace mstab
