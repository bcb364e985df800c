#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fdilab/basis.hpp"
#include "fdilab/grid.hpp"
#include "fdilab/nn.hpp"
#include "fdilab/powerflow.hpp"

namespace fdilab::models {

// Per-channel affine conditioning applied to encoder inputs only.
struct Standardizer {
    Vector mu, scale;

    static Standardizer fit(const Matrix& Z);
    Vector apply(const Vector& z) const;
    Matrix apply(const Matrix& Z) const;
    Vector invert(const Vector& zs) const;
};

// How a latent vector is read as a voltage state before the basis lift.
// Latent coordinates fill [va at non-slack buses, vm at non-slack buses] in
// order; unfilled slots take va = 0 / vm = fill value, latent coordinates
// beyond the 2n-2 state slots are unused.
struct LatentStateMap {
    std::size_t n = 0;
    std::size_t slack = 0;
    std::size_t d = 0;
    Vector vm_fill;  // per-bus magnitudes for unfilled vm slots (and slack)

    std::size_t state_dim() const { return 2 * (n - 1); }

    pf::StateVector to_state(const double* u) const;
    // du (length d) += (dstate as [va; vm] of length 2n) through the slot map
    void accumulate_latent_gradient(const double* dstate, double* du) const;

    static LatentStateMap create(const grid::NetworkCase& net, std::size_t d);
};

struct ModelInfo {
    std::string case_name;
    std::uint64_t schema_hash = 0;
    std::uint64_t seed = 0;
    nn::TrainConfig config;
};

// Nonlinear encoder -> symbolic basis lift -> strictly linear decoder.
struct PgAeModel {
    nn::Mlp encoder;               // m -> d
    basis::LiftedBasisSpec spec;
    Matrix D;                      // m x p, no bias
    Standardizer standardizer;
    LatentStateMap latent_map;
    ModelInfo info;

    std::size_t m() const { return D.rows; }
    std::size_t latent_dim() const { return latent_map.d; }

    Vector encode(const Vector& z) const;
    Vector decode_latent(const Vector& u) const;  // D * f(state(u))
    Vector apply_decoder(const Vector& w) const;  // D * w
    Vector reconstruct(const Vector& z) const;

    std::string to_json() const;
    static PgAeModel from_json(const std::string& text);
};

// Fully nonlinear mirror-image autoencoder operating in standardized space.
struct StandardAeModel {
    nn::Mlp encoder;  // m -> d
    nn::Mlp decoder;  // d -> m
    Standardizer standardizer;
    ModelInfo info;

    std::size_t m() const { return encoder.input_dim(); }
    std::size_t latent_dim() const { return encoder.output_dim(); }

    Vector encode(const Vector& z) const;
    Vector decode_latent(const Vector& u) const;  // destandardized
    Vector reconstruct(const Vector& z) const;

    std::string to_json() const;
    static StandardAeModel from_json(const std::string& text);
};

struct MaskConfig {
    std::size_t keep_count = 0;  // m0
    std::uint64_t seed = 0;
};

struct TrainReport {
    double initial_loss = 0.0;  // mean per-sample squared error, first epoch
    double final_loss = 0.0;    // last epoch
    double seconds = 0.0;
};

// Minimizes mean ||z - D f(Enc(z))||^2 over encoder weights and D jointly.
// Dataset rows are samples. d defaults to the free-state dimension when 0.
PgAeModel train_pgae(const Matrix& dataset, const grid::NetworkCase& net,
                     const basis::LiftedBasisSpec& spec, std::size_t d,
                     const nn::TrainConfig& config, TrainReport* report = nullptr);

StandardAeModel train_standard_ae(const Matrix& dataset, std::size_t d,
                                  const nn::TrainConfig& config,
                                  TrainReport* report = nullptr);

struct MaskedTrainOutput {
    PgAeModel model;
    Vector channel_errors;  // held-out mean squared error per channel
};

// Masked variant: per batch a Bernoulli(m0/m) mask b is drawn, the encoder
// sees b .* z and the loss keeps only the masked-out channels. Trains on the
// first half of the dataset; channel errors come from the second half with
// full input. m0 = m falls back to the unmasked loss and draws no masks.
MaskedTrainOutput train_masked_pgae(const Matrix& dataset, const grid::NetworkCase& net,
                                    const basis::LiftedBasisSpec& spec, std::size_t d,
                                    const MaskConfig& mask, const nn::TrainConfig& config,
                                    TrainReport* report = nullptr);

// Reconstruction metrics over a dataset.
double mean_sample_sqerror(const PgAeModel& model, const Matrix& Z);
double mean_sample_sqerror(const StandardAeModel& model, const Matrix& Z);
Vector per_channel_mse(const PgAeModel& model, const Matrix& Z);

// sqrt(mean_{t,j} [(z - zhat)^2 / scale_j^2]) for per-channel scales.
double relative_rmse(const Matrix& Z, const Matrix& Zhat, const Vector& scales);
Matrix reconstruct_all(const PgAeModel& model, const Matrix& Z);
Matrix reconstruct_all(const StandardAeModel& model, const Matrix& Z);

void save_model_file(const std::string& path, const std::string& json);
std::string load_model_file(const std::string& path);

}  // namespace fdilab::models
