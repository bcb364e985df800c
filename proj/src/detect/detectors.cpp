#include <cmath>
#include <cstring>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "fdilab/detectors.hpp"
#include "fdilab/stats.hpp"

namespace fdilab::detect {

double LearnedDetector::reconstruction_error(const Vector& z) const {
    Vector recon = ae.reconstruct(z);
    double err = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double r = z[j] - recon[j];
        err += r * r;
    }
    return err;
}

LearnedDetector train_learned_detector(const Matrix& nominal, double alpha, std::size_t d,
                                       const nn::TrainConfig& config) {
    if (nominal.rows < 4)
        throw std::invalid_argument("train_learned_detector: dataset too small to split");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("train_learned_detector: alpha must lie in (0, 1)");

    const std::size_t n_train = nominal.rows / 2;
    Matrix train(n_train, nominal.cols);
    Matrix calib(nominal.rows - n_train, nominal.cols);
    std::memcpy(train.data(), nominal.data(), train.a.size() * sizeof(double));
    std::memcpy(calib.data(), nominal.row(n_train), calib.a.size() * sizeof(double));

    double spread = 0.0;
    for (std::size_t j = 0; j < nominal.cols; ++j) {
        double lo = nominal(0, j), hi = nominal(0, j);
        for (std::size_t i = 1; i < nominal.rows; ++i) {
            lo = std::min(lo, nominal(i, j));
            hi = std::max(hi, nominal(i, j));
        }
        spread = std::max(spread, hi - lo);
    }
    if (spread < 1e-12)
        std::cerr << "fdilab: warning: learned detector trained on a constant dataset\n";

    LearnedDetector det;
    det.alpha = alpha;
    det.ae = models::train_standard_ae(train, d, config);

    std::vector<double> errors;
    errors.reserve(calib.rows);
    for (std::size_t i = 0; i < calib.rows; ++i) {
        Vector z(calib.row(i), calib.row(i) + calib.cols);
        errors.push_back(det.reconstruction_error(z));
    }
    det.tau_learn = stats::empirical_quantile(std::move(errors), 1.0 - alpha);
    return det;
}

Vector residual_series(const Matrix& series, const pf::NoiseModel& noise,
                       const pf::MeasurementEvaluator& eval, const est::WlsOptions& wls,
                       std::size_t* failures,
                       const std::vector<pf::StateVector>* row_inits) {
    if (row_inits && row_inits->size() != series.rows)
        throw std::invalid_argument("residual_series: row_inits size mismatch");
    Vector residuals(series.rows, std::numeric_limits<double>::infinity());
    if (failures) *failures = 0;
    std::optional<pf::StateVector> warm;
    for (std::size_t i = 0; i < series.rows; ++i) {
        Vector z(series.row(i), series.row(i) + series.cols);
        try {
            pf::StateVector start = pf::StateVector::flat(eval.network());
            start.vm = pf::setpoint_vm(eval.network());
            if (row_inits) start = (*row_inits)[i];
            est::EstimationResult best = est::wls_estimate(z, noise, eval, start, wls);
            if (warm && !row_inits) {
                est::EstimationResult warm_run = est::wls_estimate(z, noise, eval, *warm, wls);
                if (warm_run.residual < best.residual) best = warm_run;
            }
            if (!best.converged && failures) ++*failures;
            residuals[i] = best.residual;
            warm = best.state_hat;
        } catch (const std::exception&) {
            if (failures) ++*failures;
            warm.reset();
        }
    }
    return residuals;
}

Vector reconstruction_errors(const models::StandardAeModel& ae, const Matrix& Z) {
    Vector errors(Z.rows);
    for (std::size_t i = 0; i < Z.rows; ++i) {
        Vector z(Z.row(i), Z.row(i) + Z.cols);
        Vector recon = ae.reconstruct(z);
        double err = 0.0;
        for (std::size_t j = 0; j < Z.cols; ++j) {
            const double r = z[j] - recon[j];
            err += r * r;
        }
        errors[i] = err;
    }
    return errors;
}

BypassReport evaluate_bypass(const Matrix& series, const est::BddConfig& bdd,
                             const pf::NoiseModel& noise,
                             const pf::MeasurementEvaluator& eval,
                             const LearnedDetector* learned, const est::WlsOptions& wls) {
    if (series.rows == 0) throw std::invalid_argument("evaluate_bypass: empty series");
    BypassReport report;
    report.samples = series.rows;
    report.alpha = bdd.alpha;
    report.has_learned = learned != nullptr;

    std::size_t failures = 0;
    Vector residuals = residual_series(series, noise, eval, wls, &failures);
    report.estimation_failures = failures;

    std::size_t bdd_pass = 0, learn_pass = 0;
    std::vector<double> finite;
    for (std::size_t i = 0; i < series.rows; ++i) {
        if (std::isfinite(residuals[i])) {
            finite.push_back(residuals[i]);
            if (residuals[i] < bdd.tau) ++bdd_pass;
        }
        if (learned) {
            Vector z(series.row(i), series.row(i) + series.cols);
            if (!learned->flags(z)) ++learn_pass;
        }
    }
    report.succ_bdd = static_cast<double>(bdd_pass) / static_cast<double>(series.rows);
    report.succ_learn =
        learned ? static_cast<double>(learn_pass) / static_cast<double>(series.rows) : 0.0;
    report.median_residual = finite.empty() ? std::numeric_limits<double>::infinity()
                                            : stats::median(std::move(finite));
    return report;
}

}  // namespace fdilab::detect
