#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fdilab/linalg.hpp"
#include "fdilab/rng.hpp"

namespace fdilab::nn {

enum class Activation { Tanh, Identity };

// One affine layer; forward is Y = X * W + b with W stored input x output.
struct Layer {
    Matrix W;
    Vector b;
};

struct Mlp {
    std::vector<Layer> layers;
    Activation hidden_activation = Activation::Tanh;

    std::size_t input_dim() const { return layers.front().W.rows; }
    std::size_t output_dim() const { return layers.back().W.cols; }
    std::size_t parameter_count() const;

    // Glorot-uniform weights, zero biases.
    static Mlp create(const std::vector<std::size_t>& dims, Rng& rng,
                      Activation hidden = Activation::Tanh);
};

struct ForwardCache {
    std::vector<Matrix> inputs;  // input to each layer (inputs[0] is the batch)
    Matrix output;
};

// Affine + activation per hidden layer, final layer affine.
Matrix mlp_forward(const Mlp& net, const Matrix& X, ForwardCache* cache = nullptr);

struct MlpGrads {
    std::vector<Layer> layers;

    static MlpGrads zeros_like(const Mlp& net);
};

// Reverse-mode gradients; returns dL/dX. `cache` must come from a forward
// pass of the same batch.
Matrix mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& dY,
                    MlpGrads& grads);

struct TrainConfig {
    double learning_rate = 2e-4;
    std::size_t batch_size = 50;
    std::size_t max_epochs = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
};

// Adam with bias correction over independently registered parameter blocks.
// One begin_step() per optimizer step, then update() for every block.
class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    std::size_t add_block(std::size_t n);
    void begin_step();
    void update(std::size_t block, double* p, const double* g, std::size_t n, double lr);
    void reset_block(std::size_t block);
    long step_count() const { return t_; }

private:
    struct Slot {
        Vector m, v;
    };
    std::vector<Slot> slots_;
    long t_ = 0;
    double beta1_, beta2_, eps_;
    double bc1_ = 1.0, bc2_ = 1.0;
};

// Registers every layer of `net` in `opt`; returns the block handles.
std::vector<std::size_t> register_mlp(Adam& opt, const Mlp& net);
void adam_step(Mlp& net, const MlpGrads& grads, Adam& opt,
               const std::vector<std::size_t>& blocks, double lr);

// Deterministic Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace fdilab::nn
