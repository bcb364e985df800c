#include <cmath>
#include <stdexcept>

#include "fdilab/estimation.hpp"
#include "fdilab/kernels.hpp"
#include "fdilab/stats.hpp"

namespace fdilab::est {
namespace {

double weighted_objective(const Vector& z, const Vector& h, const Vector& w) {
    double obj = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = z[i] - h[i];
        obj += w[i] * r * r;
    }
    return obj;
}

}  // namespace

EstimationResult wls_estimate(const Vector& z, const pf::NoiseModel& noise,
                              const pf::MeasurementEvaluator& eval,
                              const pf::StateVector& init, const WlsOptions& options) {
    const std::size_t m = eval.size();
    if (z.size() != m) throw std::invalid_argument("wls_estimate: measurement size mismatch");
    if (noise.sigma.size() != m) throw std::invalid_argument("wls_estimate: noise size mismatch");

    pf::FreeStateLayout layout = options.layout;
    if (layout.size() == 0) layout = pf::FreeStateLayout::standard(eval.network());
    const std::size_t s = layout.size();
    if (m < s)
        throw std::runtime_error("unobservable schema: fewer measurements than free states");
    for (double v : init.vm)
        if (!(v > 0.0)) throw std::invalid_argument("wls_estimate: init vm must be positive");

    const Vector w = noise.weights();
    pf::StateVector state = init;
    Vector h = eval.measure(state);
    double obj = weighted_objective(z, h, w);

    EstimationResult result;
    double damping = 0.0;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        Matrix J = eval.jacobian(state, layout);

        // gain = J^T W J, rhs = J^T W (z - h)
        Matrix Jw(m, s);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < s; ++j) Jw(i, j) = w[i] * J(i, j);
        Matrix gain = matmul_tn(J, Jw);
        Vector resid(m);
        for (std::size_t i = 0; i < m; ++i) resid[i] = w[i] * (z[i] - h[i]);
        Vector rhs = matvec_t(J, resid);

        bool accepted = false;
        for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
            Matrix damped = gain;
            if (damping > 0.0)
                for (std::size_t j = 0; j < s; ++j) damped(j, j) += damping;
            bool singular = false;
            Vector step = solve_spd(std::move(damped), rhs, &singular);
            if (singular) {
                if (damping == 0.0 && attempt == 0)
                    throw std::runtime_error("singular gain matrix: schema is unobservable");
                damping = (damping == 0.0) ? 1e-6 : damping * 10.0;
                continue;
            }

            pf::StateVector trial = state;
            Vector free = layout.extract(trial);
            for (std::size_t j = 0; j < s; ++j) free[j] += step[j];
            layout.apply(free, trial);
            Vector h_trial = eval.measure(trial);
            const double obj_trial = weighted_objective(z, h_trial, w);

            if (std::isfinite(obj_trial) && obj_trial <= obj + 1e-14) {
                state = std::move(trial);
                h = std::move(h_trial);
                obj = obj_trial;
                damping *= 0.25;
                if (damping < 1e-12) damping = 0.0;
                accepted = true;
                result.iterations = iter;
                if (norm_inf(step) <= options.step_tolerance) {
                    result.state_hat = state;
                    result.residual = obj;
                    result.converged = true;
                    return result;
                }
            } else {
                damping = (damping == 0.0) ? 1e-6 : damping * 10.0;
            }
        }
        if (!accepted) break;  // damping exhausted; return best point found
    }

    result.state_hat = state;
    result.residual = obj;
    result.converged = false;
    return result;
}

double residual_error(const Vector& z, const pf::NoiseModel& noise,
                      const pf::MeasurementEvaluator& eval, const WlsOptions& options,
                      const pf::StateVector* warm_start) {
    pf::StateVector flat = pf::StateVector::flat(eval.network());
    flat.vm = pf::setpoint_vm(eval.network());

    EstimationResult best = wls_estimate(z, noise, eval, flat, options);
    if (warm_start) {
        EstimationResult warm = wls_estimate(z, noise, eval, *warm_start, options);
        if (warm.residual < best.residual) best = warm;
    }
    return best.residual;
}

BddConfig BddConfig::for_schema(double alpha, std::size_t m, std::size_t s) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("bdd alpha must lie in (0, 1)");
    if (m <= s) throw std::invalid_argument("bdd requires m > s (positive dof)");
    BddConfig config;
    config.alpha = alpha;
    config.dof = m - s;
    config.tau = stats::chi2_quantile(config.dof, 1.0 - alpha);
    return config;
}

BddResult bdd_detect(const Vector& z, const BddConfig& config,
                     const pf::NoiseModel& noise, const pf::MeasurementEvaluator& eval,
                     const WlsOptions& options, const pf::StateVector* warm_start) {
    BddResult result;
    result.residual = residual_error(z, noise, eval, options, warm_start);
    result.anomalous = result.residual >= config.tau;
    return result;
}

}  // namespace fdilab::est
