#pragma once

// Least-squares fit of the two-segment tolerance model
//   INR(SNR) = alpha * SNR + beta + gamma / (SNR - pole)
// with the pole fixed, which keeps the problem linear in (alpha, beta, gamma).

#include "lora_nbi/waveforms.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lora_nbi {

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ThresholdCurve {
    int sf = 7;
    InterfererKind kind = InterfererKind::gmsk;
    std::vector<std::pair<double, double>> points;  // (snr_db, max_inr_db)
    double pole_db = 0.0;                           // R_T - N_0 - 1

    void validate() const {
        if (points.size() < 4) throw std::invalid_argument("threshold curve needs at least 4 points");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i].first > pole_db)) {
                throw std::domain_error("SNR " + std::to_string(points[i].first) +
                                        " dB is not above the pole at " + std::to_string(pole_db) + " dB");
            }
            if (i > 0 && points[i].first < points[i - 1].first) {
                throw std::invalid_argument("threshold curve points must be sorted by SNR");
            }
        }
    }
};

struct FitParams {
    int sf = 7;
    InterfererKind kind = InterfererKind::gmsk;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double pole_db = 0.0;
    std::optional<double> r_squared;  // empty when the data has zero variance

    bool degenerate() const noexcept { return !r_squared.has_value(); }
    bool gamma_flagged() const noexcept { return gamma >= 0.0; }
};

inline FitParams fit_threshold_model(const ThresholdCurve& curve) {
    curve.validate();
    const auto m = static_cast<Eigen::Index>(curve.points.size());
    Eigen::MatrixXd design(m, 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [snr, inr] = curve.points[static_cast<std::size_t>(i)];
        design(i, 0) = snr;
        design(i, 1) = 1.0;
        design(i, 2) = 1.0 / (snr - curve.pole_db);
        y(i) = inr;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 3) {
        throw FitError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                       "); SNR values must be distinct");
    }
    const Eigen::Vector3d coef = qr.solve(y);

    FitParams p;
    p.sf = curve.sf;
    p.kind = curve.kind;
    p.alpha = coef(0);
    p.beta = coef(1);
    p.gamma = coef(2);
    p.pole_db = curve.pole_db;
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    const double ss_res = (y - design * coef).squaredNorm();
    // Zero variance (up to rounding of the data itself) has no defined R^2.
    if (ss_tot > 1e-24 * std::max(1.0, y.squaredNorm())) p.r_squared = 1.0 - ss_res / ss_tot;
    return p;
}

inline double eval_threshold_model(const FitParams& p, double snr_db) {
    if (!(snr_db > p.pole_db)) throw std::domain_error("model undefined at or below the pole");
    return p.alpha * snr_db + p.beta + p.gamma / (snr_db - p.pole_db);
}

// beta_a - beta_b: tolerance gap between two interferer kinds at high SNR.
inline double high_snr_gap(const FitParams& a, const FitParams& b) {
    if (a.sf != b.sf || a.pole_db != b.pole_db) {
        throw std::domain_error("high_snr_gap needs fits with the same SF and pole");
    }
    return a.beta - b.beta;
}

}  // namespace lora_nbi
