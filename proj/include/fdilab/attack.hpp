#pragma once

#include <cstddef>
#include <vector>

#include "fdilab/linalg.hpp"
#include "fdilab/models.hpp"

namespace fdilab::attack {

struct AttackConfig {
    Vector c;            // latent perturbation, length d
    double gamma = 1.0;  // scalar multiplier applied to c

    static AttackConfig uniform(std::size_t d, double value = 0.1, double gamma = 1.0);
};

struct LimitedAttackPlan {
    std::vector<std::size_t> critical_set;  // channel indices, V

    std::size_t m0() const { return critical_set.size(); }
};

// z_a = z + D(f(Enc(z) + gamma c)) - D(f(Enc(z))). The additive form keeps
// the baseline untouched when reconstruction is imperfect.
Vector perturb(const models::PgAeModel& model, const Vector& z, const AttackConfig& config);
Vector perturb(const models::StandardAeModel& model, const Vector& z,
               const AttackConfig& config);

// Channels in the critical set take perturbed values, the rest stay original.
template <typename Model>
Vector perturb_limited(const Model& model, const Vector& z, const AttackConfig& config,
                       const LimitedAttackPlan& plan) {
    if (plan.critical_set.empty())
        throw std::invalid_argument("perturb_limited: critical set must be nonempty");
    Vector za = perturb(model, z, config);
    Vector out = z;
    for (std::size_t idx : plan.critical_set) {
        if (idx >= z.size()) throw std::invalid_argument("perturb_limited: channel out of range");
        out[idx] = za[idx];
    }
    return out;
}

// Indices of the m0 smallest per-channel errors; ties break on lower index.
LimitedAttackPlan select_critical_meters(const Vector& error_profile, std::size_t m0);

// The one-dimensional manifold H = {x^2} with Enc(z) = z^(1/3), Dec(u) = u^3:
// exact reconstruction everywhere on H, yet a latent shift can leave H.
struct Lemma1Report {
    double max_reconstruction_error = 0.0;  // over sample points of H
    double witness_z = 0.0;
    double witness_c = 0.0;
    double witness_output = 0.0;
    double witness_distance = 0.0;          // distance from output to H
    bool off_manifold = false;
};

Lemma1Report lemma1_demo();
double lemma1_perturbed_output(double z, double c);  // Dec(Enc(z) + c)

}  // namespace fdilab::attack
