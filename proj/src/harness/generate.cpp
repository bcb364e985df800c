#include <cmath>
#include <cstring>
#include <iostream>
#include <stdexcept>

#include "fdilab/attack.hpp"
#include "fdilab/harness.hpp"
#include "fdilab/rng.hpp"

namespace fdilab::harness {

constexpr double kPi = 3.14159265358979323846;

Matrix Dataset::head(std::size_t rows) const {
    if (rows > Z.rows) throw std::invalid_argument("Dataset::head: not enough rows");
    Matrix out(rows, Z.cols);
    std::memcpy(out.data(), Z.data(), out.a.size() * sizeof(double));
    return out;
}

pf::MeasurementSchema schema_by_name(const grid::NetworkCase& net, const std::string& name) {
    if (name == "default") return pf::default_schema(net);
    if (name == "pinj") return pf::pinj_only_schema(net);
    throw std::invalid_argument("unknown schema name: " + name);
}

Dataset generate_timeseries(const ScenarioConfig& config) {
    if (config.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    if (!(config.noise_percent > 0.0))
        throw std::invalid_argument("noise percent must be > 0 (use 1e-9 for noise-free studies)");

    Dataset data;
    data.config = config;
    data.net = config.case_path.empty() ? grid::load_bundled_case(config.case_name)
                                        : grid::load_case_file(config.case_path);
    data.schema = schema_by_name(data.net, config.schema);

    pf::MeasurementEvaluator eval(data.net, data.schema);
    const std::size_t N = config.n_samples;
    const std::size_t m = data.schema.size();

    Rng rng(config.seed);
    data.Ztrue = Matrix(N, m);
    data.states.reserve(N);

    const std::size_t n = data.net.n_bus();
    double base_load_total = 0.0;
    for (const auto& bus : data.net.buses) base_load_total += bus.p_load;

    std::optional<pf::StateVector> prev;
    std::vector<bool> keep(N, true);
    for (std::size_t t = 0; t < N; ++t) {
        // common daily sinusoid over 1440 minutes; each load additionally
        // carries its own per-step factor so bus profiles are diverse
        const double phase = 2.0 * kPi * static_cast<double>(t % 1440) / 1440.0;
        const double base = 1.0 + config.profile_amplitude * std::sin(phase - 0.5 * kPi);
        Vector bus_scale(n);
        for (std::size_t i = 0; i < n; ++i)
            bus_scale[i] =
                base * rng.uniform(1.0 - config.scale_jitter, 1.0 + config.scale_jitter);

        double damp = 1.0;
        pf::PowerFlowOptions opts;
        opts.initial = prev;
        bool solved = false;
        for (int attempt = 0; attempt < 3 && !solved; ++attempt) {
            pf::Dispatch dispatch = pf::default_dispatch(data.net);
            double scaled_total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = 1.0 + damp * (bus_scale[i] - 1.0);
                dispatch.p_set[i] += (1.0 - s) * data.net.buses[i].p_load;
                dispatch.q_set[i] += (1.0 - s) * data.net.buses[i].q_load;
                scaled_total += s * data.net.buses[i].p_load;
            }
            // generation follows the total load so the slack stays sane
            const double gen_ratio =
                base_load_total > 0.0 ? scaled_total / base_load_total : 1.0;
            for (const auto& gen : data.net.gens) {
                if (!gen.in_service) continue;
                dispatch.p_set[gen.bus] += (gen_ratio - 1.0) * gen.pg;
            }
            try {
                const auto result = pf::solve_powerflow(data.net, dispatch, opts);
                data.states.push_back(result.state);
                const Vector z = eval.measure(result.state);
                std::memcpy(data.Ztrue.row(t), z.data(), m * sizeof(double));
                prev = result.state;
                solved = true;
            } catch (const std::exception&) {
                damp *= 0.5;  // damp the scaling toward nominal and retry
                opts.initial.reset();
            }
        }
        if (!solved) {
            std::cerr << "fdilab: warning: skipping time step " << t
                      << " (power flow did not converge)\n";
            data.skipped.push_back(t);
            keep[t] = false;
        }
    }

    if (!data.skipped.empty()) {
        Matrix packed(data.states.size(), m);
        std::size_t row = 0;
        for (std::size_t t = 0; t < N; ++t)
            if (keep[t]) {
                std::memcpy(packed.row(row), data.Ztrue.row(t), m * sizeof(double));
                ++row;
            }
        data.Ztrue = std::move(packed);
    }

    // sigma_i = noise% of the series mean magnitude, floored at 0.1 p.u.
    data.noise.sigma.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < data.Ztrue.rows; ++i) acc += std::abs(data.Ztrue(i, j));
        const double level = std::max(acc / static_cast<double>(data.Ztrue.rows), 0.1);
        data.noise.sigma[j] = (config.noise_percent / 100.0) * level;
    }

    data.Z = Matrix(data.Ztrue.rows, m);
    for (std::size_t i = 0; i < data.Ztrue.rows; ++i)
        for (std::size_t j = 0; j < m; ++j)
            data.Z(i, j) = data.Ztrue(i, j) + data.noise.sigma[j] * rng.gaussian();
    return data;
}

nn::TrainConfig default_train_config(std::uint64_t seed) {
    nn::TrainConfig config;
    config.seed = seed;
    return config;
}

ExperimentContext train_pgae_experiment(const ScenarioConfig& scenario, basis::BasisMode mode,
                                        std::size_t latent_dim, std::size_t train_samples) {
    ExperimentContext ctx;
    ctx.data = generate_timeseries(scenario);
    const auto spec = basis::build_basis_spec(ctx.data.net, mode);
    const Matrix train =
        train_samples == 0 ? ctx.data.Z : ctx.data.head(train_samples);
    ctx.model = models::train_pgae(train, ctx.data.net, spec, latent_dim,
                                   default_train_config(scenario.seed), &ctx.train_report);
    ctx.model.info.schema_hash = ctx.data.schema.hash(ctx.data.net);
    return ctx;
}

namespace {

template <typename Model>
Matrix attack_series_impl(const Model& model, const Matrix& Z, const Vector& c, double gamma) {
    attack::AttackConfig config;
    config.c = c;
    config.gamma = gamma;
    Matrix Za(Z.rows, Z.cols);
    for (std::size_t i = 0; i < Z.rows; ++i) {
        Vector z(Z.row(i), Z.row(i) + Z.cols);
        Vector za = attack::perturb(model, z, config);
        std::memcpy(Za.row(i), za.data(), Z.cols * sizeof(double));
    }
    return Za;
}

}  // namespace

Matrix attack_series(const models::PgAeModel& model, const Matrix& Z, const Vector& c,
                     double gamma) {
    return attack_series_impl(model, Z, c, gamma);
}

Matrix attack_series(const models::StandardAeModel& model, const Matrix& Z, const Vector& c,
                     double gamma) {
    return attack_series_impl(model, Z, c, gamma);
}

}  // namespace fdilab::harness
