#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fdilab/models.hpp"

#include "json.hpp"

namespace fdilab::models {

Standardizer Standardizer::fit(const Matrix& Z) {
    if (Z.rows == 0) throw std::invalid_argument("Standardizer::fit: empty dataset");
    Standardizer st;
    st.mu.assign(Z.cols, 0.0);
    st.scale.assign(Z.cols, 1.0);
    for (std::size_t j = 0; j < Z.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < Z.rows; ++i) s += Z(i, j);
        st.mu[j] = s / static_cast<double>(Z.rows);
    }
    for (std::size_t j = 0; j < Z.cols; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < Z.rows; ++i) {
            const double dev = Z(i, j) - st.mu[j];
            ss += dev * dev;
        }
        st.scale[j] = std::max(std::sqrt(ss / static_cast<double>(Z.rows)), 1e-8);
    }
    return st;
}

Vector Standardizer::apply(const Vector& z) const {
    Vector out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = (z[j] - mu[j]) / scale[j];
    return out;
}

Matrix Standardizer::apply(const Matrix& Z) const {
    Matrix out(Z.rows, Z.cols);
    for (std::size_t i = 0; i < Z.rows; ++i)
        for (std::size_t j = 0; j < Z.cols; ++j) out(i, j) = (Z(i, j) - mu[j]) / scale[j];
    return out;
}

Vector Standardizer::invert(const Vector& zs) const {
    Vector out(zs.size());
    for (std::size_t j = 0; j < zs.size(); ++j) out[j] = zs[j] * scale[j] + mu[j];
    return out;
}

LatentStateMap LatentStateMap::create(const grid::NetworkCase& net, std::size_t d) {
    LatentStateMap map;
    map.n = net.n_bus();
    map.slack = net.slack_index();
    map.d = d;
    map.vm_fill = pf::setpoint_vm(net);
    return map;
}

pf::StateVector LatentStateMap::to_state(const double* u) const {
    pf::StateVector st;
    st.va.assign(n, 0.0);
    st.vm = vm_fill;
    const std::size_t per_block = n - 1;
    std::size_t slot = 0;
    for (std::size_t bus = 0; bus < n && slot < d; ++bus) {
        if (bus == slack) continue;
        st.va[bus] = u[slot++];
    }
    // remaining latent coordinates fill vm slots; any beyond 2(n-1) are unused
    std::size_t vm_slot = per_block;
    for (std::size_t bus = 0; bus < n && vm_slot < d && vm_slot < 2 * per_block; ++bus) {
        if (bus == slack) continue;
        st.vm[bus] = u[vm_slot++];
    }
    return st;
}

void LatentStateMap::accumulate_latent_gradient(const double* dstate, double* du) const {
    const std::size_t per_block = n - 1;
    std::size_t slot = 0;
    for (std::size_t bus = 0; bus < n && slot < d; ++bus) {
        if (bus == slack) continue;
        du[slot++] += dstate[bus];  // va block of dstate
    }
    std::size_t vm_slot = per_block;
    for (std::size_t bus = 0; bus < n && vm_slot < d && vm_slot < 2 * per_block; ++bus) {
        if (bus == slack) continue;
        du[vm_slot++] += dstate[n + bus];
    }
}

Vector PgAeModel::encode(const Vector& z) const {
    Matrix X(1, z.size());
    X.a = standardizer.apply(z);
    Matrix U = nn::mlp_forward(encoder, X);
    return U.a;
}

Vector PgAeModel::decode_latent(const Vector& u) const {
    if (u.size() != latent_map.d) throw std::invalid_argument("latent dimension mismatch");
    const pf::StateVector st = latent_map.to_state(u.data());
    return apply_decoder(basis::eval_basis(spec, st));
}

Vector PgAeModel::apply_decoder(const Vector& w) const {
    return matvec(D, w);
}

Vector PgAeModel::reconstruct(const Vector& z) const {
    return decode_latent(encode(z));
}

Vector StandardAeModel::encode(const Vector& z) const {
    Matrix X(1, z.size());
    X.a = standardizer.apply(z);
    return nn::mlp_forward(encoder, X).a;
}

Vector StandardAeModel::decode_latent(const Vector& u) const {
    Matrix U(1, u.size());
    U.a = u;
    Matrix Y = nn::mlp_forward(decoder, U);
    return standardizer.invert(Y.a);
}

Vector StandardAeModel::reconstruct(const Vector& z) const {
    return decode_latent(encode(z));
}

Matrix reconstruct_all(const PgAeModel& model, const Matrix& Z) {
    Matrix out(Z.rows, Z.cols);
    for (std::size_t i = 0; i < Z.rows; ++i) {
        Vector z(Z.row(i), Z.row(i) + Z.cols);
        Vector zhat = model.reconstruct(z);
        for (std::size_t j = 0; j < Z.cols; ++j) out(i, j) = zhat[j];
    }
    return out;
}

Matrix reconstruct_all(const StandardAeModel& model, const Matrix& Z) {
    Matrix out(Z.rows, Z.cols);
    for (std::size_t i = 0; i < Z.rows; ++i) {
        Vector z(Z.row(i), Z.row(i) + Z.cols);
        Vector zhat = model.reconstruct(z);
        for (std::size_t j = 0; j < Z.cols; ++j) out(i, j) = zhat[j];
    }
    return out;
}

double mean_sample_sqerror(const PgAeModel& model, const Matrix& Z) {
    Matrix R = reconstruct_all(model, Z);
    double acc = 0.0;
    for (std::size_t i = 0; i < Z.a.size(); ++i) {
        const double dev = R.a[i] - Z.a[i];
        acc += dev * dev;
    }
    return acc / static_cast<double>(Z.rows);
}

double mean_sample_sqerror(const StandardAeModel& model, const Matrix& Z) {
    Matrix R = reconstruct_all(model, Z);
    double acc = 0.0;
    for (std::size_t i = 0; i < Z.a.size(); ++i) {
        const double dev = R.a[i] - Z.a[i];
        acc += dev * dev;
    }
    return acc / static_cast<double>(Z.rows);
}

Vector per_channel_mse(const PgAeModel& model, const Matrix& Z) {
    Matrix R = reconstruct_all(model, Z);
    Vector err(Z.cols, 0.0);
    for (std::size_t i = 0; i < Z.rows; ++i)
        for (std::size_t j = 0; j < Z.cols; ++j) {
            const double dev = R(i, j) - Z(i, j);
            err[j] += dev * dev;
        }
    for (double& e : err) e /= static_cast<double>(Z.rows);
    return err;
}

double relative_rmse(const Matrix& Z, const Matrix& Zhat, const Vector& scales) {
    if (Z.rows != Zhat.rows || Z.cols != Zhat.cols || scales.size() != Z.cols)
        throw std::invalid_argument("relative_rmse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < Z.rows; ++i)
        for (std::size_t j = 0; j < Z.cols; ++j) {
            const double dev = (Zhat(i, j) - Z(i, j)) / scales[j];
            acc += dev * dev;
        }
    return std::sqrt(acc / static_cast<double>(Z.rows * Z.cols));
}

namespace {

nlohmann::json mlp_to_json(const nn::Mlp& net) {
    nlohmann::json j;
    j["activation"] = net.hidden_activation == nn::Activation::Tanh ? "tanh" : "identity";
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json lj;
        lj["in"] = layer.W.rows;
        lj["out"] = layer.W.cols;
        lj["W"] = layer.W.a;
        lj["b"] = layer.b;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

nn::Mlp mlp_from_json(const nlohmann::json& j) {
    nn::Mlp net;
    net.hidden_activation = j.at("activation").get<std::string>() == "tanh"
                                ? nn::Activation::Tanh
                                : nn::Activation::Identity;
    for (const auto& lj : j.at("layers")) {
        nn::Layer layer;
        layer.W = Matrix(lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>());
        layer.W.a = lj.at("W").get<std::vector<double>>();
        layer.b = lj.at("b").get<std::vector<double>>();
        if (layer.W.a.size() != layer.W.rows * layer.W.cols)
            throw std::runtime_error("model checkpoint: layer weight size mismatch");
        net.layers.push_back(std::move(layer));
    }
    return net;
}

nlohmann::json info_to_json(const ModelInfo& info) {
    nlohmann::json j;
    j["case"] = info.case_name;
    j["schema_hash"] = info.schema_hash;
    j["seed"] = info.seed;
    j["config"] = {{"learning_rate", info.config.learning_rate},
                   {"batch_size", info.config.batch_size},
                   {"max_epochs", info.config.max_epochs},
                   {"beta1", info.config.beta1},
                   {"beta2", info.config.beta2},
                   {"epsilon", info.config.epsilon},
                   {"seed", info.config.seed}};
    return j;
}

ModelInfo info_from_json(const nlohmann::json& j) {
    ModelInfo info;
    info.case_name = j.at("case").get<std::string>();
    info.schema_hash = j.at("schema_hash").get<std::uint64_t>();
    info.seed = j.at("seed").get<std::uint64_t>();
    const auto& c = j.at("config");
    info.config.learning_rate = c.at("learning_rate").get<double>();
    info.config.batch_size = c.at("batch_size").get<std::size_t>();
    info.config.max_epochs = c.at("max_epochs").get<std::size_t>();
    info.config.beta1 = c.at("beta1").get<double>();
    info.config.beta2 = c.at("beta2").get<double>();
    info.config.epsilon = c.at("epsilon").get<double>();
    info.config.seed = c.at("seed").get<std::uint64_t>();
    return info;
}

}  // namespace

std::string PgAeModel::to_json() const {
    nlohmann::json j;
    j["kind"] = "pgae";
    j["encoder"] = mlp_to_json(encoder);
    j["basis"] = nlohmann::json::parse(spec.to_json());
    j["D"] = {{"rows", D.rows}, {"cols", D.cols}, {"values", D.a}};
    j["standardizer"] = {{"mu", standardizer.mu}, {"scale", standardizer.scale}};
    j["latent_map"] = {{"n", latent_map.n},
                       {"slack", latent_map.slack},
                       {"d", latent_map.d},
                       {"vm_fill", latent_map.vm_fill}};
    j["info"] = info_to_json(info);
    return j.dump();
}

PgAeModel PgAeModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind").get<std::string>() != "pgae")
        throw std::runtime_error("checkpoint is not a physics-guided autoencoder");
    PgAeModel model;
    model.encoder = mlp_from_json(j.at("encoder"));
    model.spec = basis::LiftedBasisSpec::from_json(j.at("basis").dump());
    model.D = Matrix(j.at("D").at("rows").get<std::size_t>(),
                     j.at("D").at("cols").get<std::size_t>());
    model.D.a = j.at("D").at("values").get<std::vector<double>>();
    model.standardizer.mu = j.at("standardizer").at("mu").get<std::vector<double>>();
    model.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    model.latent_map.n = j.at("latent_map").at("n").get<std::size_t>();
    model.latent_map.slack = j.at("latent_map").at("slack").get<std::size_t>();
    model.latent_map.d = j.at("latent_map").at("d").get<std::size_t>();
    model.latent_map.vm_fill = j.at("latent_map").at("vm_fill").get<std::vector<double>>();
    model.info = info_from_json(j.at("info"));
    return model;
}

std::string StandardAeModel::to_json() const {
    nlohmann::json j;
    j["kind"] = "standard_ae";
    j["encoder"] = mlp_to_json(encoder);
    j["decoder"] = mlp_to_json(decoder);
    j["standardizer"] = {{"mu", standardizer.mu}, {"scale", standardizer.scale}};
    j["info"] = info_to_json(info);
    return j.dump();
}

StandardAeModel StandardAeModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind").get<std::string>() != "standard_ae")
        throw std::runtime_error("checkpoint is not a standard autoencoder");
    StandardAeModel model;
    model.encoder = mlp_from_json(j.at("encoder"));
    model.decoder = mlp_from_json(j.at("decoder"));
    model.standardizer.mu = j.at("standardizer").at("mu").get<std::vector<double>>();
    model.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    model.info = info_from_json(j.at("info"));
    return model;
}

void save_model_file(const std::string& path, const std::string& json) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << json << '\n';
}

std::string load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace fdilab::models
