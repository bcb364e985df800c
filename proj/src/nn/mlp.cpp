#include <cmath>
#include <stdexcept>

#include "fdilab/kernels.hpp"
#include "fdilab/nn.hpp"

namespace fdilab::nn {

std::size_t Mlp::parameter_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers) count += layer.W.a.size() + layer.b.size();
    return count;
}

Mlp Mlp::create(const std::vector<std::size_t>& dims, Rng& rng, Activation hidden) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp::create: need at least two dims");
    Mlp net;
    net.hidden_activation = hidden;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.W = Matrix(dims[l], dims[l + 1]);
        layer.b.assign(dims[l + 1], 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double& w : layer.W.a) w = rng.uniform(-limit, limit);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Matrix mlp_forward(const Mlp& net, const Matrix& X, ForwardCache* cache) {
    if (X.cols != net.input_dim())
        throw std::invalid_argument("mlp_forward: input width mismatch");
    if (cache) {
        cache->inputs.clear();
        cache->inputs.reserve(net.layers.size());
    }
    Matrix cur = X;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        if (cache) cache->inputs.push_back(cur);
        Matrix next(cur.rows, layer.W.cols);
        kern::ops().gemm_nn(cur.data(), layer.W.data(), next.data(), cur.rows, cur.cols,
                            layer.W.cols);
        for (std::size_t r = 0; r < next.rows; ++r)
            kern::ops().axpy(1.0, layer.b.data(), next.row(r), next.cols);
        const bool is_hidden = l + 1 < net.layers.size();
        if (is_hidden && net.hidden_activation == Activation::Tanh)
            for (double& v : next.a) v = std::tanh(v);
        cur = std::move(next);
    }
    if (cache) cache->output = cur;
    return cur;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads grads;
    for (const auto& layer : net.layers) {
        Layer g;
        g.W = Matrix(layer.W.rows, layer.W.cols);
        g.b.assign(layer.b.size(), 0.0);
        grads.layers.push_back(std::move(g));
    }
    return grads;
}

Matrix mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& dY,
                    MlpGrads& grads) {
    if (cache.inputs.size() != net.layers.size())
        throw std::invalid_argument("mlp_backward: cache does not match network");
    if (grads.layers.size() != net.layers.size()) grads = MlpGrads::zeros_like(net);

    Matrix delta = dY;  // gradient w.r.t. the current layer's post-activation output
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        const Matrix& input = cache.inputs[li];
        const bool is_hidden = li + 1 < net.layers.size();

        if (is_hidden && net.hidden_activation == Activation::Tanh) {
            // activated output of this layer is the next layer's cached input
            const Matrix& activated = (li + 1 < cache.inputs.size()) ? cache.inputs[li + 1]
                                                                     : cache.output;
            kern::ops().tanh_backward(activated.data(), delta.data(), delta.data(),
                                      delta.a.size());
        }

        Layer& g = grads.layers[li];
        kern::ops().gemm_tn(input.data(), delta.data(), g.W.data(), input.rows, input.cols,
                            delta.cols);
        for (std::size_t j = 0; j < g.b.size(); ++j) g.b[j] = 0.0;
        for (std::size_t r = 0; r < delta.rows; ++r)
            kern::ops().axpy(1.0, delta.row(r), g.b.data(), delta.cols);

        Matrix dX(delta.rows, layer.W.rows);
        kern::ops().gemm_nt(delta.data(), layer.W.data(), dX.data(), delta.rows, delta.cols,
                            layer.W.rows);
        delta = std::move(dX);
    }
    return delta;
}

std::size_t Adam::add_block(std::size_t n) {
    slots_.push_back({Vector(n, 0.0), Vector(n, 0.0)});
    return slots_.size() - 1;
}

void Adam::begin_step() {
    ++t_;
    bc1_ = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    bc2_ = 1.0 - std::pow(beta2_, static_cast<double>(t_));
}

void Adam::update(std::size_t block, double* p, const double* g, std::size_t n, double lr) {
    Slot& slot = slots_.at(block);
    if (slot.m.size() != n) throw std::invalid_argument("Adam::update: block size mismatch");
    kern::ops().adam_step(p, g, slot.m.data(), slot.v.data(), n, lr, beta1_, beta2_, eps_,
                          bc1_, bc2_);
}

void Adam::reset_block(std::size_t block) {
    Slot& slot = slots_.at(block);
    std::fill(slot.m.begin(), slot.m.end(), 0.0);
    std::fill(slot.v.begin(), slot.v.end(), 0.0);
}

std::vector<std::size_t> register_mlp(Adam& opt, const Mlp& net) {
    std::vector<std::size_t> blocks;
    for (const auto& layer : net.layers) {
        blocks.push_back(opt.add_block(layer.W.a.size()));
        blocks.push_back(opt.add_block(layer.b.size()));
    }
    return blocks;
}

void adam_step(Mlp& net, const MlpGrads& grads, Adam& opt,
               const std::vector<std::size_t>& blocks, double lr) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        opt.update(blocks[2 * l], net.layers[l].W.data(), grads.layers[l].W.data(),
                   net.layers[l].W.a.size(), lr);
        opt.update(blocks[2 * l + 1], net.layers[l].b.data(), grads.layers[l].b.data(),
                   net.layers[l].b.size(), lr);
    }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace fdilab::nn
