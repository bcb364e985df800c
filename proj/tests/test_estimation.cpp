#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fdilab/estimation.hpp"
#include "fdilab/stats.hpp"
#include "test_util.hpp"

using namespace fdilab;

namespace {

pf::NoiseModel uniform_noise(std::size_t m, double sigma) {
    pf::NoiseModel noise;
    noise.sigma.assign(m, sigma);
    return noise;
}

}  // namespace

TEST_CASE("noise-free measurements recover the true state") {
    auto net = grid::load_bundled_case("case14");
    pf::MeasurementEvaluator eval(net, pf::default_schema(net));
    auto pfres = pf::solve_powerflow(net, pf::default_dispatch(net));
    Vector z = eval.measure(pfres.state);
    auto noise = uniform_noise(z.size(), 0.01);

    pf::StateVector init = pf::StateVector::flat(net);
    init.vm = pf::setpoint_vm(net);
    auto result = est::wls_estimate(z, noise, eval, init);
    REQUIRE(result.converged);
    CHECK(result.residual <= 1e-12);
    double err = 0.0;
    for (std::size_t i = 0; i < net.n_bus(); ++i) {
        err = std::max(err, std::abs(result.state_hat.vm[i] - pfres.state.vm[i]));
        err = std::max(err, std::abs(result.state_hat.va[i] - pfres.state.va[i]));
    }
    CHECK(err <= 1e-6);
}

TEST_CASE("objective at the estimate never exceeds the noise energy") {
    auto net = grid::load_bundled_case("case14");
    pf::MeasurementEvaluator eval(net, pf::default_schema(net));
    auto pfres = pf::solve_powerflow(net, pf::default_dispatch(net));
    Vector z_clean = eval.measure(pfres.state);
    Rng rng(6);
    const double sigma = 0.01;
    auto noise = uniform_noise(z_clean.size(), sigma);

    for (int rep = 0; rep < 5; ++rep) {
        Vector z = z_clean;
        double noise_energy = 0.0;
        for (double& v : z) {
            const double e = sigma * rng.gaussian();
            v += e;
            noise_energy += (e / sigma) * (e / sigma);
        }
        const double r = est::residual_error(z, noise, eval, {}, &pfres.state);
        CHECK(r <= noise_energy + 1e-9);
        CHECK(r >= 0.0);
    }
}

TEST_CASE("unobservable schema raises an error") {
    auto net = grid::load_bundled_case("case14");
    pf::MeasurementSchema vmag_only;
    for (std::size_t i = 0; i < net.n_bus(); ++i)
        vmag_only.channels.push_back({pf::ChannelKind::Vmag, i, 0});
    pf::MeasurementEvaluator eval(net, vmag_only);
    auto noise = uniform_noise(vmag_only.size(), 0.01);
    pf::StateVector init = pf::StateVector::flat(net);
    CHECK_THROWS_WITH_AS(est::wls_estimate(eval.measure(init), noise, eval, init),
                         doctest::Contains("unobservable"), std::runtime_error);
}

TEST_CASE("residual distribution is calibrated on nominal noise") {
    auto net = grid::load_bundled_case("case14");
    pf::MeasurementEvaluator eval(net, pf::default_schema(net));
    auto pfres = pf::solve_powerflow(net, pf::default_dispatch(net));
    Vector z_clean = eval.measure(pfres.state);
    const std::size_t m = z_clean.size();
    const std::size_t s = pf::FreeStateLayout::standard(net).size();
    const std::size_t dof = m - s;  // 56
    const double sigma = 0.01;
    auto noise = uniform_noise(m, sigma);

    Rng rng(99);
    const int N = 200;
    double mean_r = 0.0;
    int flagged = 0;
    auto bdd = est::BddConfig::for_schema(0.05, m, s);
    CHECK(bdd.dof == 56);
    for (int rep = 0; rep < N; ++rep) {
        Vector z = z_clean;
        for (double& v : z) v += sigma * rng.gaussian();
        auto det = est::bdd_detect(z, bdd, noise, eval, {}, &pfres.state);
        mean_r += det.residual;
        if (det.anomalous) ++flagged;
    }
    mean_r /= N;
    // chi-squared mean is dof; allow 4 standard errors of the sample mean
    const double se = std::sqrt(2.0 * dof / static_cast<double>(N));
    CHECK(std::abs(mean_r - static_cast<double>(dof)) < 4.0 * se);
    // flag rate near alpha (99% binomial band around 0.05 for N=200)
    CHECK(flagged >= 1);
    CHECK(flagged <= 25);
}

TEST_CASE("gross single-channel errors are flagged") {
    auto net = grid::load_bundled_case("case14");
    pf::MeasurementEvaluator eval(net, pf::default_schema(net));
    auto pfres = pf::solve_powerflow(net, pf::default_dispatch(net));
    Vector z_clean = eval.measure(pfres.state);
    const double sigma = 0.01;
    auto noise = uniform_noise(z_clean.size(), sigma);
    const std::size_t s = pf::FreeStateLayout::standard(net).size();

    Rng rng(123);
    Vector z = z_clean;
    for (double& v : z) v += sigma * rng.gaussian();
    z[5] += 50.0 * sigma;

    const double r = est::residual_error(z, noise, eval, {}, &pfres.state);
    CHECK(r > stats::chi2_quantile(z.size() - s, 0.999));
    auto bdd = est::BddConfig::for_schema(0.05, z.size(), s);
    CHECK(est::bdd_detect(z, bdd, noise, eval, {}, &pfres.state).anomalous);
}

TEST_CASE("residual is invariant to channel permutation") {
    auto net = grid::load_bundled_case("case14");
    auto schema = pf::default_schema(net);
    auto pfres = pf::solve_powerflow(net, pf::default_dispatch(net));
    pf::MeasurementEvaluator eval(net, schema);
    Vector z = eval.measure(pfres.state);
    Rng rng(55);
    for (double& v : z) v += 0.01 * rng.gaussian();
    auto noise = uniform_noise(z.size(), 0.01);
    const double r1 = est::residual_error(z, noise, eval, {}, &pfres.state);

    // apply one fixed permutation consistently to schema, z and sigma
    std::vector<std::size_t> perm(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) perm[i] = (i * 37 + 11) % z.size();
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return (a * 2654435761u) % 1000003 < (b * 2654435761u) % 1000003;
    });
    pf::MeasurementSchema shuffled;
    Vector z2(z.size());
    pf::NoiseModel noise2;
    noise2.sigma.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        shuffled.channels.push_back(schema.channels[perm[i]]);
        z2[i] = z[perm[i]];
        noise2.sigma[i] = noise.sigma[perm[i]];
    }
    pf::MeasurementEvaluator eval2(net, shuffled);
    const double r2 = est::residual_error(z2, noise2, eval2, {}, &pfres.state);
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-9));
}

TEST_CASE("bdd config ties the threshold to the chi2 quantile") {
    auto config = est::BddConfig::for_schema(0.05, 82, 26);
    CHECK(config.dof == 56);
    CHECK(config.tau == doctest::Approx(stats::chi2_quantile(56, 0.95)));
    CHECK_THROWS(est::BddConfig::for_schema(0.0, 82, 26));
    CHECK_THROWS(est::BddConfig::for_schema(0.05, 26, 26));
}
