#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "fdilab/kernels.hpp"
#include "fdilab/models.hpp"

namespace fdilab::models {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::size_t> encoder_dims(std::size_t m, std::size_t d) {
    return {m, 64, 64, 64, 64, d};
}

std::vector<std::size_t> decoder_dims(std::size_t d, std::size_t m) {
    return {d, 64, 64, 64, 64, m};
}

double matrix_trace(const Matrix& A) {
    double tr = 0.0;
    for (std::size_t i = 0; i < A.rows && i < A.cols; ++i) tr += A(i, i);
    return tr;
}

// Least-squares fit of D to min sum_t ||z_t - D f_t||^2 with a small ridge.
void refit_decoder(Matrix& D, const Matrix& F, const Matrix& Z) {
    const std::size_t p = F.cols;
    const std::size_t m = Z.cols;
    Matrix G = matmul_tn(F, F);
    Matrix rhs = matmul_tn(F, Z);  // p x m
    double lambda = 1e-8 * (matrix_trace(G) / static_cast<double>(p) + 1.0);
    for (int attempt = 0; attempt < 6; ++attempt) {
        Matrix L = G;
        for (std::size_t j = 0; j < p; ++j) L(j, j) += lambda;
        if (cholesky_factor(L)) {
            for (std::size_t row = 0; row < m; ++row) {
                Vector b(p);
                for (std::size_t j = 0; j < p; ++j) b[j] = rhs(j, row);
                Vector sol = cholesky_solve(L, std::move(b));
                for (std::size_t j = 0; j < p; ++j) D(row, j) = sol[j];
            }
            return;
        }
        lambda *= 100.0;
    }
    throw std::runtime_error("decoder least-squares fit failed (singular basis Gram matrix)");
}

struct BatchBuffers {
    Matrix X, Zraw, U, F, Zhat, dZhat, dF, dU;
    std::vector<pf::StateVector> states;
    nn::ForwardCache cache;
    nn::MlpGrads grads;
};

PgAeModel train_pgae_core(const Matrix& dataset, const grid::NetworkCase& net,
                          const basis::LiftedBasisSpec& spec, std::size_t d,
                          const nn::TrainConfig& config, const MaskConfig* mask_cfg,
                          TrainReport* report) {
    const auto t_start = Clock::now();
    const std::size_t N = dataset.rows;
    const std::size_t m = dataset.cols;
    if (N == 0) throw std::invalid_argument("train_pgae: empty dataset");
    if (spec.n != net.n_bus()) throw std::invalid_argument("train_pgae: basis/network mismatch");
    if (d == 0) d = 2 * (net.n_bus() - 1);
    const std::size_t p = spec.size();

    const bool masked = mask_cfg && mask_cfg->keep_count < m;
    if (mask_cfg && (mask_cfg->keep_count < 1 || mask_cfg->keep_count > m))
        throw std::invalid_argument("mask keep_count must lie in [1, m]");

    PgAeModel model;
    model.spec = spec;
    model.standardizer = Standardizer::fit(dataset);
    model.latent_map = LatentStateMap::create(net, d);
    model.info.case_name = net.name;
    model.info.seed = config.seed;
    model.info.config = config;

    Rng rng(config.seed);
    model.encoder = nn::Mlp::create(encoder_dims(m, d), rng);
    model.D = Matrix(m, p);
    {
        const double limit = std::sqrt(6.0 / static_cast<double>(m + p));
        for (double& w : model.D.a) w = rng.uniform(-limit, limit);
    }
    Rng mask_rng(mask_cfg ? mask_cfg->seed : 0);

    const Matrix Zs = model.standardizer.apply(dataset);

    nn::Adam opt(config.beta1, config.beta2, config.epsilon);
    const auto enc_blocks = nn::register_mlp(opt, model.encoder);
    const std::size_t d_block = opt.add_block(model.D.a.size());

    // Basis features of the whole training set under the current encoder.
    auto full_features = [&]() {
        Matrix U = nn::mlp_forward(model.encoder, Zs);
        Matrix F(N, p);
        for (std::size_t i = 0; i < N; ++i) {
            const pf::StateVector st = model.latent_map.to_state(U.row(i));
            Vector f = basis::eval_basis(spec, st);
            std::memcpy(F.row(i), f.data(), p * sizeof(double));
        }
        return F;
    };

    const char* refit_env = std::getenv("FDILAB_REFIT");  // debug: "none"|"warmup"|"both"
    const std::string refit_mode = refit_env ? refit_env : "both";
    const bool refit_feasible = p <= 8000 && refit_mode != "none";
    if (refit_feasible && refit_mode == "both")
        refit_decoder(model.D, full_features(), dataset);

    const std::size_t warmup_epochs = std::min<std::size_t>(50, config.max_epochs);
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    BatchBuffers buf;
    double epoch_loss = 0.0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto order = nn::shuffled_indices(N, rng);
        epoch_loss = 0.0;
        for (std::size_t start = 0; start < N; start += batch) {
            const std::size_t b = std::min(batch, N - start);

            buf.X = Matrix(b, m);
            buf.Zraw = Matrix(b, m);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t src = order[start + i];
                std::memcpy(buf.X.row(i), Zs.row(src), m * sizeof(double));
                std::memcpy(buf.Zraw.row(i), dataset.row(src), m * sizeof(double));
            }

            Vector keep;  // per-channel mask; empty when not masking
            if (masked) {
                keep.assign(m, 1.0);
                const double keep_prob = static_cast<double>(mask_cfg->keep_count) /
                                         static_cast<double>(m);
                for (std::size_t j = 0; j < m; ++j)
                    keep[j] = (mask_rng.uniform() < keep_prob) ? 1.0 : 0.0;
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < m; ++j) buf.X(i, j) *= keep[j];
            }

            buf.U = nn::mlp_forward(model.encoder, buf.X, &buf.cache);

            buf.F = Matrix(b, p);
            buf.states.resize(b);
            for (std::size_t i = 0; i < b; ++i) {
                buf.states[i] = model.latent_map.to_state(buf.U.row(i));
                Vector f = basis::eval_basis(spec, buf.states[i]);
                std::memcpy(buf.F.row(i), f.data(), p * sizeof(double));
            }

            buf.Zhat = Matrix(b, m);
            kern::ops().gemm_nt(buf.F.data(), model.D.data(), buf.Zhat.data(), b, p, m);

            // channel errors are weighted by the standardization scale so
            // small-magnitude channels are fit as tightly as large ones
            buf.dZhat = Matrix(b, m);
            double loss = 0.0;
            const double inv_b = 1.0 / static_cast<double>(b);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    double w = 1.0 / (model.standardizer.scale[j] * model.standardizer.scale[j]);
                    if (masked) w *= 1.0 - keep[j];
                    const double r = buf.Zhat(i, j) - buf.Zraw(i, j);
                    loss += w * r * r;
                    buf.dZhat(i, j) = 2.0 * w * r * inv_b;
                }
            }
            loss *= inv_b;
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(b) / static_cast<double>(N);

            // dD = dZhat^T F ; dF = dZhat D ; then back through basis and encoder
            Matrix dD(m, p);
            kern::ops().gemm_tn(buf.dZhat.data(), buf.F.data(), dD.data(), b, m, p);
            buf.dF = Matrix(b, p);
            kern::ops().gemm_nn(buf.dZhat.data(), model.D.data(), buf.dF.data(), b, m, p);

            buf.dU = Matrix(b, d);
            Vector dstate(2 * net.n_bus());
            for (std::size_t i = 0; i < b; ++i) {
                std::fill(dstate.begin(), dstate.end(), 0.0);
                basis::accumulate_state_gradient(spec, buf.states[i], buf.dF.row(i),
                                                 dstate.data());
                model.latent_map.accumulate_latent_gradient(dstate.data(), buf.dU.row(i));
            }

            Matrix dX = nn::mlp_backward(model.encoder, buf.cache, buf.dU, buf.grads);
            (void)dX;

            opt.begin_step();
            nn::adam_step(model.encoder, buf.grads, opt, enc_blocks, config.learning_rate);
            opt.update(d_block, model.D.data(), dD.data(), model.D.a.size(),
                       config.learning_rate);
        }

        if (report && epoch == 1) report->initial_loss = epoch_loss;
        if (epoch == warmup_epochs && refit_feasible && config.max_epochs > warmup_epochs) {
            refit_decoder(model.D, full_features(), dataset);
            opt.reset_block(d_block);
        }
    }

    if (report) {
        report->final_loss = epoch_loss;
        report->seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
    }
    return model;
}

}  // namespace

PgAeModel train_pgae(const Matrix& dataset, const grid::NetworkCase& net,
                     const basis::LiftedBasisSpec& spec, std::size_t d,
                     const nn::TrainConfig& config, TrainReport* report) {
    return train_pgae_core(dataset, net, spec, d, config, nullptr, report);
}

MaskedTrainOutput train_masked_pgae(const Matrix& dataset, const grid::NetworkCase& net,
                                    const basis::LiftedBasisSpec& spec, std::size_t d,
                                    const MaskConfig& mask, const nn::TrainConfig& config,
                                    TrainReport* report) {
    if (dataset.rows < 2) throw std::invalid_argument("train_masked_pgae: dataset too small");
    const std::size_t n_train = dataset.rows / 2;
    Matrix train(n_train, dataset.cols);
    Matrix held(dataset.rows - n_train, dataset.cols);
    std::memcpy(train.data(), dataset.data(), train.a.size() * sizeof(double));
    std::memcpy(held.data(), dataset.row(n_train), held.a.size() * sizeof(double));

    MaskedTrainOutput out;
    out.model = train_pgae_core(train, net, spec, d, config, &mask, report);
    out.channel_errors = per_channel_mse(out.model, held);
    return out;
}

StandardAeModel train_standard_ae(const Matrix& dataset, std::size_t d,
                                  const nn::TrainConfig& config, TrainReport* report) {
    const auto t_start = Clock::now();
    const std::size_t N = dataset.rows;
    const std::size_t m = dataset.cols;
    if (N == 0) throw std::invalid_argument("train_standard_ae: empty dataset");
    if (d == 0) throw std::invalid_argument("train_standard_ae: latent dim required");

    StandardAeModel model;
    model.standardizer = Standardizer::fit(dataset);
    model.info.seed = config.seed;
    model.info.config = config;

    Rng rng(config.seed);
    model.encoder = nn::Mlp::create(encoder_dims(m, d), rng);
    model.decoder = nn::Mlp::create(decoder_dims(d, m), rng);

    const Matrix Zs = model.standardizer.apply(dataset);

    nn::Adam opt(config.beta1, config.beta2, config.epsilon);
    const auto enc_blocks = nn::register_mlp(opt, model.encoder);
    const auto dec_blocks = nn::register_mlp(opt, model.decoder);

    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    nn::ForwardCache enc_cache, dec_cache;
    nn::MlpGrads enc_grads, dec_grads;
    double epoch_loss = 0.0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto order = nn::shuffled_indices(N, rng);
        epoch_loss = 0.0;
        for (std::size_t start = 0; start < N; start += batch) {
            const std::size_t b = std::min(batch, N - start);
            Matrix X(b, m);
            for (std::size_t i = 0; i < b; ++i)
                std::memcpy(X.row(i), Zs.row(order[start + i]), m * sizeof(double));

            Matrix U = nn::mlp_forward(model.encoder, X, &enc_cache);
            Matrix Y = nn::mlp_forward(model.decoder, U, &dec_cache);

            // loss in standardized space
            Matrix dY(b, m);
            double loss = 0.0;
            const double inv_b = 1.0 / static_cast<double>(b);
            for (std::size_t i = 0; i < b * m; ++i) {
                const double r = Y.a[i] - X.a[i];
                loss += r * r;
                dY.a[i] = 2.0 * r * inv_b;
            }
            loss *= inv_b;
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(b) / static_cast<double>(N);

            Matrix dU = nn::mlp_backward(model.decoder, dec_cache, dY, dec_grads);
            nn::mlp_backward(model.encoder, enc_cache, dU, enc_grads);

            opt.begin_step();
            nn::adam_step(model.encoder, enc_grads, opt, enc_blocks, config.learning_rate);
            nn::adam_step(model.decoder, dec_grads, opt, dec_blocks, config.learning_rate);
        }
        if (report && epoch == 1) report->initial_loss = epoch_loss;
    }

    if (report) {
        report->final_loss = epoch_loss;
        report->seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
    }
    return model;
}

}  // namespace fdilab::models
