#include "doctest.h"

#include <cmath>
#include <cstring>

#include "fdilab/models.hpp"
#include "test_util.hpp"

using namespace fdilab;

namespace {

// small synthetic series on the two-bus system: load scaling + noise
Matrix two_bus_dataset(const grid::NetworkCase& net, std::size_t N, std::uint64_t seed,
                       double sigma = 0.002) {
    pf::MeasurementEvaluator eval(net, pf::default_schema(net));
    Rng rng(seed);
    Matrix Z(N, eval.size());
    for (std::size_t t = 0; t < N; ++t) {
        const double scale = rng.uniform(0.8, 1.2);
        auto result = pf::solve_powerflow(net, pf::scaled_dispatch(net, scale));
        Vector z = eval.measure(result.state);
        for (std::size_t j = 0; j < z.size(); ++j) Z(t, j) = z[j] + sigma * rng.gaussian();
    }
    return Z;
}

nn::TrainConfig quick_config(std::uint64_t seed, std::size_t epochs = 120) {
    nn::TrainConfig config;
    config.seed = seed;
    config.max_epochs = epochs;
    config.batch_size = 16;
    config.learning_rate = 1e-3;
    return config;
}

bool same_mlp(const nn::Mlp& a, const nn::Mlp& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l)
        if (a.layers[l].W.a != b.layers[l].W.a || a.layers[l].b != b.layers[l].b) return false;
    return true;
}

}  // namespace

TEST_CASE("latent state map fills a prefix of the state slots") {
    auto net = grid::load_bundled_case("case14");
    const auto fills = pf::setpoint_vm(net);

    auto map5 = models::LatentStateMap::create(net, 5);
    Vector u5 = {0.1, 0.2, 0.3, 0.4, 0.5};
    auto st5 = map5.to_state(u5.data());
    CHECK(st5.va[0] == 0.0);  // slack
    CHECK(st5.va[1] == doctest::Approx(0.1));
    CHECK(st5.va[5] == doctest::Approx(0.5));
    CHECK(st5.va[6] == 0.0);  // unfilled slot
    for (std::size_t i = 0; i < 14; ++i) CHECK(st5.vm[i] == doctest::Approx(fills[i]));

    auto map26 = models::LatentStateMap::create(net, 26);
    Vector u26(26);
    for (std::size_t i = 0; i < 26; ++i) u26[i] = 0.01 * static_cast<double>(i + 1);
    auto st26 = map26.to_state(u26.data());
    CHECK(st26.va[13] == doctest::Approx(0.13));
    CHECK(st26.vm[1] == doctest::Approx(0.14));
    CHECK(st26.vm[13] == doctest::Approx(0.26));
    CHECK(st26.vm[0] == doctest::Approx(fills[0]));  // slack magnitude stays fixed

    // latent coordinates beyond the state dimension are ignored
    auto map30 = models::LatentStateMap::create(net, 30);
    Vector u30(30, 0.05);
    u30[26] = 99.0;
    auto st30 = map30.to_state(u30.data());
    CHECK(st30.vm[13] == doctest::Approx(0.05));

    // adjoint consistency of the gradient mapping
    Rng rng(8);
    Vector dstate(28);
    for (double& v : dstate) v = rng.uniform(-1.0, 1.0);
    Vector du(26, 0.0);
    map26.accumulate_latent_gradient(dstate.data(), du.data());
    // forward difference through to_state must match
    for (std::size_t j = 0; j < 26; ++j) {
        Vector up = u26, dn = u26;
        up[j] += 1e-6;
        dn[j] -= 1e-6;
        auto sp = map26.to_state(up.data());
        auto sn = map26.to_state(dn.data());
        double dir = 0.0;
        for (std::size_t i = 0; i < 14; ++i) {
            dir += dstate[i] * (sp.va[i] - sn.va[i]) / 2e-6;
            dir += dstate[14 + i] * (sp.vm[i] - sn.vm[i]) / 2e-6;
        }
        CHECK(du[j] == doctest::Approx(dir).epsilon(1e-6));
    }
}

TEST_CASE("pgae decoder is strictly linear") {
    auto net = testutil::two_bus_case();
    Matrix Z = two_bus_dataset(net, 48, 1);
    auto spec = basis::build_basis_spec(net, basis::BasisMode::Dense);
    auto model = models::train_pgae(Z, net, spec, 0, quick_config(3, 40));

    Rng rng(9);
    Vector w1(spec.size()), w2(spec.size());
    for (double& v : w1) v = rng.uniform(-1.0, 1.0);
    for (double& v : w2) v = rng.uniform(-1.0, 1.0);
    const double a = 1.7, b = -0.4;
    Vector combo(spec.size());
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * w1[i] + b * w2[i];
    Vector lhs = model.apply_decoder(combo);
    Vector r1 = model.apply_decoder(w1);
    Vector r2 = model.apply_decoder(w2);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs[i] == doctest::Approx(a * r1[i] + b * r2[i]).epsilon(1e-12));
}

TEST_CASE("a constant dataset is reconstructed nearly exactly") {
    auto net = testutil::two_bus_case();
    pf::MeasurementEvaluator eval(net, pf::default_schema(net));
    auto pfres = pf::solve_powerflow(net, pf::default_dispatch(net));
    Vector z = eval.measure(pfres.state);
    Matrix Z(32, z.size());
    for (std::size_t i = 0; i < Z.rows; ++i)
        std::memcpy(Z.row(i), z.data(), z.size() * sizeof(double));

    auto spec = basis::build_basis_spec(net, basis::BasisMode::Dense);
    auto model = models::train_pgae(Z, net, spec, 0, quick_config(5, 30));
    // Adam dithers at the learning-rate scale around the exact one-point fit;
    // the error is negligible against the ~0.5 p.u. data scale
    const double mse = models::mean_sample_sqerror(model, Z);
    CHECK(mse < 1e-6);
}

TEST_CASE("standard ae fits a linear subspace") {
    Rng rng(12);
    const std::size_t m = 6, d = 2, N = 128;
    Matrix basis_dirs(d, m);
    for (double& v : basis_dirs.a) v = rng.uniform(-0.5, 0.5);
    Matrix Z(N, m);
    double energy = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double u0 = rng.uniform(-1.0, 1.0), u1 = rng.uniform(-1.0, 1.0);
        for (std::size_t j = 0; j < m; ++j) {
            Z(i, j) = u0 * basis_dirs(0, j) + u1 * basis_dirs(1, j);
            energy += Z(i, j) * Z(i, j);
        }
    }
    auto model = models::train_standard_ae(Z, d, quick_config(7, 400));
    const double mse_total = models::mean_sample_sqerror(model, Z) * static_cast<double>(N);
    CHECK(mse_total / energy < 0.02);
}

TEST_CASE("trainers are seed reproducible") {
    auto net = testutil::two_bus_case();
    Matrix Z = two_bus_dataset(net, 40, 2);
    auto spec = basis::build_basis_spec(net, basis::BasisMode::Sparse);

    auto m1 = models::train_pgae(Z, net, spec, 0, quick_config(11, 25));
    auto m2 = models::train_pgae(Z, net, spec, 0, quick_config(11, 25));
    CHECK(same_mlp(m1.encoder, m2.encoder));
    CHECK(m1.D.a == m2.D.a);

    auto a1 = models::train_standard_ae(Z, 2, quick_config(13, 25));
    auto a2 = models::train_standard_ae(Z, 2, quick_config(13, 25));
    CHECK(same_mlp(a1.encoder, a2.encoder));
    CHECK(same_mlp(a1.decoder, a2.decoder));

    models::MaskConfig mask{4, 21};
    auto k1 = models::train_masked_pgae(Z, net, spec, 0, mask, quick_config(15, 25));
    auto k2 = models::train_masked_pgae(Z, net, spec, 0, mask, quick_config(15, 25));
    CHECK(same_mlp(k1.model.encoder, k2.model.encoder));
    CHECK(k1.channel_errors == k2.channel_errors);
}

TEST_CASE("full-keep mask reduces to the unmasked trainer") {
    auto net = testutil::two_bus_case();
    Matrix Z = two_bus_dataset(net, 40, 3);
    auto spec = basis::build_basis_spec(net, basis::BasisMode::Dense);
    const std::size_t m = Z.cols;

    models::MaskConfig mask{m, 77};  // keep everything: no masks are drawn
    auto masked = models::train_masked_pgae(Z, net, spec, 0, mask, quick_config(19, 30));

    Matrix first_half(Z.rows / 2, m);
    std::memcpy(first_half.data(), Z.data(), first_half.a.size() * sizeof(double));
    auto plain = models::train_pgae(first_half, net, spec, 0, quick_config(19, 30));

    CHECK(same_mlp(masked.model.encoder, plain.encoder));
    CHECK(masked.model.D.a == plain.D.a);

    CHECK(masked.channel_errors.size() == m);
    for (double e : masked.channel_errors) CHECK(e >= 0.0);
}

TEST_CASE("masked training rejects a bad keep count") {
    auto net = testutil::two_bus_case();
    Matrix Z = two_bus_dataset(net, 16, 4);
    auto spec = basis::build_basis_spec(net, basis::BasisMode::Dense);
    models::MaskConfig mask{0, 1};
    CHECK_THROWS(models::train_masked_pgae(Z, net, spec, 0, mask, quick_config(1, 5)));
    mask.keep_count = Z.cols + 1;
    CHECK_THROWS(models::train_masked_pgae(Z, net, spec, 0, mask, quick_config(1, 5)));
}

TEST_CASE("model checkpoints round trip through json") {
    auto net = testutil::two_bus_case();
    Matrix Z = two_bus_dataset(net, 32, 5);
    auto spec = basis::build_basis_spec(net, basis::BasisMode::Dense);
    auto model = models::train_pgae(Z, net, spec, 0, quick_config(23, 20));
    auto restored = models::PgAeModel::from_json(model.to_json());
    Vector z(Z.row(3), Z.row(3) + Z.cols);
    CHECK(testutil::max_abs_diff(model.reconstruct(z), restored.reconstruct(z)) == 0.0);

    auto ae = models::train_standard_ae(Z, 2, quick_config(29, 20));
    auto ae2 = models::StandardAeModel::from_json(ae.to_json());
    CHECK(testutil::max_abs_diff(ae.reconstruct(z), ae2.reconstruct(z)) == 0.0);

    CHECK_THROWS(models::StandardAeModel::from_json(model.to_json()));
}

TEST_CASE("training reports decreasing loss") {
    auto net = testutil::two_bus_case();
    Matrix Z = two_bus_dataset(net, 64, 6);
    auto spec = basis::build_basis_spec(net, basis::BasisMode::Dense);
    models::TrainReport report;
    models::train_pgae(Z, net, spec, 0, quick_config(31, 60), &report);
    CHECK(report.final_loss < report.initial_loss);
    CHECK(report.seconds > 0.0);
}
