#pragma once

#include <cstddef>
#include <optional>

#include "fdilab/powerflow.hpp"

namespace fdilab::est {

struct WlsOptions {
    double step_tolerance = 1e-8;  // infinity norm of the state update
    int max_iterations = 50;
    pf::FreeStateLayout layout;    // empty -> standard layout
};

struct EstimationResult {
    pf::StateVector state_hat;
    double residual = 0.0;   // weighted objective at the estimate
    int iterations = 0;
    bool converged = false;
};

// Gauss-Newton (with Levenberg damping fallback) minimization of
// (z - h(x))^T R^-1 (z - h(x)). Throws on an unobservable schema.
EstimationResult wls_estimate(const Vector& z, const pf::NoiseModel& noise,
                              const pf::MeasurementEvaluator& eval,
                              const pf::StateVector& init, const WlsOptions& options = {});

// min_x objective, approximated by converged WLS from a flat start plus an
// optional warm start; the smaller objective wins.
double residual_error(const Vector& z, const pf::NoiseModel& noise,
                      const pf::MeasurementEvaluator& eval,
                      const WlsOptions& options = {},
                      const pf::StateVector* warm_start = nullptr);

struct BddConfig {
    double alpha = 0.05;
    std::size_t dof = 0;
    double tau = 0.0;

    static BddConfig for_schema(double alpha, std::size_t m, std::size_t s);
};

struct BddResult {
    bool anomalous = false;
    double residual = 0.0;
};

BddResult bdd_detect(const Vector& z, const BddConfig& config,
                     const pf::NoiseModel& noise, const pf::MeasurementEvaluator& eval,
                     const WlsOptions& options = {},
                     const pf::StateVector* warm_start = nullptr);

}  // namespace fdilab::est
