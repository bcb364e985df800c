#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fdilab/attack.hpp"

namespace fdilab::attack {
namespace {

template <typename Model>
Vector perturb_impl(const Model& model, const Vector& z, const AttackConfig& config) {
    Vector u = model.encode(z);
    if (config.c.size() != u.size())
        throw std::invalid_argument("attack latent dimension mismatch: c has " +
                                    std::to_string(config.c.size()) + ", model latent is " +
                                    std::to_string(u.size()));
    Vector base = model.decode_latent(u);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += config.gamma * config.c[j];
    Vector shifted = model.decode_latent(u);
    Vector za = z;
    for (std::size_t j = 0; j < z.size(); ++j) za[j] += shifted[j] - base[j];
    return za;
}

}  // namespace

AttackConfig AttackConfig::uniform(std::size_t d, double value, double gamma) {
    AttackConfig config;
    config.c.assign(d, value);
    config.gamma = gamma;
    return config;
}

Vector perturb(const models::PgAeModel& model, const Vector& z, const AttackConfig& config) {
    return perturb_impl(model, z, config);
}

Vector perturb(const models::StandardAeModel& model, const Vector& z,
               const AttackConfig& config) {
    return perturb_impl(model, z, config);
}

LimitedAttackPlan select_critical_meters(const Vector& error_profile, std::size_t m0) {
    if (m0 < 1 || m0 > error_profile.size())
        throw std::invalid_argument("select_critical_meters: m0 out of range");
    std::vector<std::size_t> idx(error_profile.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (error_profile[a] != error_profile[b]) return error_profile[a] < error_profile[b];
        return a < b;
    });
    LimitedAttackPlan plan;
    plan.critical_set.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m0));
    std::sort(plan.critical_set.begin(), plan.critical_set.end());
    return plan;
}

double lemma1_perturbed_output(double z, double c) {
    const double u = std::cbrt(z) + c;
    return u * u * u;
}

Lemma1Report lemma1_demo() {
    Lemma1Report report;
    const double samples[] = {0.0, 0.25, 1.0, 2.25, 4.0, 9.0, 16.0};
    for (double z : samples) {
        const double recon = lemma1_perturbed_output(z, 0.0);
        report.max_reconstruction_error =
            std::max(report.max_reconstruction_error, std::abs(recon - z));
    }
    report.witness_z = 1.0;
    report.witness_c = -2.0;
    report.witness_output = lemma1_perturbed_output(report.witness_z, report.witness_c);
    // H = {x^2 : x real} = [0, inf); distance is the negative part
    report.witness_distance = std::max(0.0, -report.witness_output);
    report.off_manifold = report.witness_distance > 0.0;
    return report;
}

}  // namespace fdilab::attack
