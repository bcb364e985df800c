#pragma once

#include <cstddef>
#include <optional>

#include "fdilab/estimation.hpp"
#include "fdilab/models.hpp"

namespace fdilab::detect {

// Reconstruction-error detector: a standard autoencoder trained on nominal
// data with the flagging threshold at the empirical (1-alpha) quantile.
struct LearnedDetector {
    models::StandardAeModel ae;
    double tau_learn = 0.0;
    double alpha = 0.05;

    double reconstruction_error(const Vector& z) const;  // ||z - recon(z)||^2
    bool flags(const Vector& z) const { return reconstruction_error(z) > tau_learn; }
};

// Trains on the first (chronological) half, calibrates the threshold on the
// second half. Warns to stderr on a degenerate (constant) dataset.
LearnedDetector train_learned_detector(const Matrix& nominal, double alpha, std::size_t d,
                                       const nn::TrainConfig& config);

struct BypassReport {
    double succ_bdd = 0.0;
    double succ_learn = 0.0;  // NaN-free only when a learned detector was given
    std::size_t samples = 0;
    std::size_t estimation_failures = 0;
    double alpha = 0.0;
    double median_residual = 0.0;
    bool has_learned = false;
};

// Fraction of samples each detector fails to flag. Estimation failures count
// as detections and are reported separately. Rows of `series` are samples.
BypassReport evaluate_bypass(const Matrix& series, const est::BddConfig& bdd,
                             const pf::NoiseModel& noise,
                             const pf::MeasurementEvaluator& eval,
                             const LearnedDetector* learned = nullptr,
                             const est::WlsOptions& wls = {});

// Residual of every row (multi-start WLS with warm starts along the series).
// When per-row initial states are given they seed the estimator and provide
// the fixed coordinates of reduced layouts (e.g. angles-only estimation).
Vector residual_series(const Matrix& series, const pf::NoiseModel& noise,
                       const pf::MeasurementEvaluator& eval,
                       const est::WlsOptions& wls = {},
                       std::size_t* failures = nullptr,
                       const std::vector<pf::StateVector>* row_inits = nullptr);

Vector reconstruction_errors(const models::StandardAeModel& ae, const Matrix& Z);

}  // namespace fdilab::detect
