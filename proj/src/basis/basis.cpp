#include <cmath>
#include <stdexcept>

#include "fdilab/basis.hpp"

#include "json.hpp"

namespace fdilab::basis {
namespace {

char kind_letter(TermKind kind) {
    switch (kind) {
        case TermKind::V: return 'V';
        case TermKind::C: return 'C';
        case TermKind::S: return 'S';
    }
    return '?';
}

}  // namespace

std::string term_name(const BasisTerm& term) {
    if (term.kind == TermKind::V) return std::string("V(") + std::to_string(term.i) + ")";
    return std::string(1, kind_letter(term.kind)) + "(" + std::to_string(term.i) + "," +
           std::to_string(term.k) + ")";
}

void LiftedBasisSpec::build_index() const {
    index_.assign(3 * n * n, -1);
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& term = terms[t];
        const std::size_t kind = static_cast<std::size_t>(term.kind);
        index_[kind * n * n + term.i * n + term.k] = static_cast<int>(t);
    }
}

int LiftedBasisSpec::find(TermKind kind, std::size_t i, std::size_t k) const {
    if (index_.size() != 3 * n * n) build_index();
    if (kind == TermKind::V) k = i;
    return index_[static_cast<std::size_t>(kind) * n * n + i * n + k];
}

LiftedBasisSpec build_basis_spec(const grid::NetworkCase& net, BasisMode mode) {
    LiftedBasisSpec spec;
    spec.n = net.n_bus();
    spec.mode = mode;
    const std::size_t n = spec.n;

    for (std::size_t i = 0; i < n; ++i) spec.terms.push_back({TermKind::V, i, i});

    if (mode == BasisMode::Dense) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) spec.terms.push_back({TermKind::C, i, k});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) spec.terms.push_back({TermKind::S, i, k});
        return spec;
    }

    // Sparse: C terms in row-major order over the sorted set {i} u N_i,
    // then S terms over neighbors only (S(i,i) is identically zero).
    const auto adj = net.adjacency();
    for (std::size_t i = 0; i < n; ++i) {
        bool self_done = false;
        for (std::size_t k : adj[i]) {
            if (!self_done && k > i) {
                spec.terms.push_back({TermKind::C, i, i});
                self_done = true;
            }
            spec.terms.push_back({TermKind::C, i, k});
        }
        if (!self_done) spec.terms.push_back({TermKind::C, i, i});
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k : adj[i]) spec.terms.push_back({TermKind::S, i, k});
    return spec;
}

namespace {

// Per-bus trig tables; cos/sin of angle differences come from the product
// identities, which keeps the per-term cost to a handful of multiplies.
struct TrigTable {
    Vector c, s;
    explicit TrigTable(const Vector& va) : c(va.size()), s(va.size()) {
        for (std::size_t i = 0; i < va.size(); ++i) {
            c[i] = std::cos(va[i]);
            s[i] = std::sin(va[i]);
        }
    }
    double cos_diff(std::size_t i, std::size_t k) const { return c[i] * c[k] + s[i] * s[k]; }
    double sin_diff(std::size_t i, std::size_t k) const { return s[i] * c[k] - c[i] * s[k]; }
};

}  // namespace

Vector eval_basis(const LiftedBasisSpec& spec, const pf::StateVector& state) {
    if (state.n_bus() != spec.n) throw std::invalid_argument("eval_basis: state size mismatch");
    const TrigTable trig(state.va);
    Vector f(spec.terms.size());
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        const auto& term = spec.terms[t];
        const std::size_t i = term.i, k = term.k;
        switch (term.kind) {
            case TermKind::V:
                f[t] = state.vm[i];
                break;
            case TermKind::C:
                f[t] = (i == k) ? state.vm[i] * state.vm[i]
                                : state.vm[i] * state.vm[k] * trig.cos_diff(i, k);
                break;
            case TermKind::S:
                f[t] = (i == k) ? 0.0 : state.vm[i] * state.vm[k] * trig.sin_diff(i, k);
                break;
        }
    }
    return f;
}

Matrix basis_jacobian(const LiftedBasisSpec& spec, const pf::StateVector& state) {
    const std::size_t n = spec.n;
    const TrigTable trig(state.va);
    Matrix J(spec.terms.size(), 2 * n);
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        const auto& term = spec.terms[t];
        const std::size_t i = term.i, k = term.k;
        switch (term.kind) {
            case TermKind::V:
                J(t, n + i) = 1.0;
                break;
            case TermKind::C: {
                if (i == k) {
                    J(t, n + i) = 2.0 * state.vm[i];
                    break;
                }
                const double c = trig.cos_diff(i, k);
                const double s = trig.sin_diff(i, k);
                J(t, n + i) += state.vm[k] * c;
                J(t, n + k) += state.vm[i] * c;
                J(t, i) += -state.vm[i] * state.vm[k] * s;
                J(t, k) += state.vm[i] * state.vm[k] * s;
                break;
            }
            case TermKind::S: {
                if (i == k) break;  // identically zero
                const double c = trig.cos_diff(i, k);
                const double s = trig.sin_diff(i, k);
                J(t, n + i) += state.vm[k] * s;
                J(t, n + k) += state.vm[i] * s;
                J(t, i) += state.vm[i] * state.vm[k] * c;
                J(t, k) += -state.vm[i] * state.vm[k] * c;
                break;
            }
        }
    }
    return J;
}

void accumulate_state_gradient(const LiftedBasisSpec& spec, const pf::StateVector& state,
                               const double* df, double* dstate) {
    const std::size_t n = spec.n;
    const TrigTable trig(state.va);
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        const double g = df[t];
        if (g == 0.0) continue;
        const auto& term = spec.terms[t];
        const std::size_t i = term.i, k = term.k;
        switch (term.kind) {
            case TermKind::V:
                dstate[n + i] += g;
                break;
            case TermKind::C: {
                if (i == k) {
                    dstate[n + i] += g * 2.0 * state.vm[i];
                    break;
                }
                const double c = trig.cos_diff(i, k);
                const double vv_s = state.vm[i] * state.vm[k] * trig.sin_diff(i, k);
                dstate[n + i] += g * state.vm[k] * c;
                dstate[n + k] += g * state.vm[i] * c;
                dstate[i] -= g * vv_s;
                dstate[k] += g * vv_s;
                break;
            }
            case TermKind::S: {
                if (i == k) break;
                const double s = trig.sin_diff(i, k);
                const double vv_c = state.vm[i] * state.vm[k] * trig.cos_diff(i, k);
                dstate[n + i] += g * state.vm[k] * s;
                dstate[n + k] += g * state.vm[i] * s;
                dstate[i] += g * vv_c;
                dstate[k] -= g * vv_c;
                break;
            }
        }
    }
}

Vector LiftedMap::apply(const Vector& f) const {
    if (f.size() != p) throw std::invalid_argument("LiftedMap::apply: size mismatch");
    Vector z(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        double acc = 0.0;
        for (const auto& [idx, coeff] : rows[r]) acc += coeff * f[static_cast<std::size_t>(idx)];
        z[r] = acc;
    }
    return z;
}

Matrix LiftedMap::to_dense() const {
    Matrix A(m, p);
    for (std::size_t r = 0; r < m; ++r)
        for (const auto& [idx, coeff] : rows[r]) A(r, static_cast<std::size_t>(idx)) += coeff;
    return A;
}

LiftedMap assemble_lifted_map(const grid::NetworkCase& net,
                              const pf::MeasurementSchema& schema,
                              const LiftedBasisSpec& spec) {
    if (spec.n != net.n_bus())
        throw std::invalid_argument("assemble_lifted_map: spec built for a different network");
    const auto ybus = grid::build_ybus(net);
    const auto branch_adm = grid::branch_params(net);
    std::vector<std::size_t> branch_slot(net.branches.size(), static_cast<std::size_t>(-1));
    for (std::size_t s = 0; s < branch_adm.size(); ++s)
        branch_slot[branch_adm[s].branch_index] = s;

    LiftedMap map;
    map.m = schema.size();
    map.p = spec.size();
    map.rows.resize(map.m);

    auto require = [&](TermKind kind, std::size_t i, std::size_t k) {
        const int idx = spec.find(kind, i, k);
        if (idx < 0)
            throw std::runtime_error("basis spec lacks required term " +
                                     term_name({kind, i, k}));
        return idx;
    };
    auto put = [&](std::size_t row, int idx, double coeff) {
        if (coeff != 0.0) map.rows[row].push_back({idx, coeff});
    };

    const std::size_t n = net.n_bus();
    for (std::size_t row = 0; row < schema.channels.size(); ++row) {
        const auto& ch = schema.channels[row];
        switch (ch.kind) {
            case pf::ChannelKind::Vmag:
                put(row, require(TermKind::V, ch.bus, ch.bus), 1.0);
                break;
            case pf::ChannelKind::Pinj: {
                const std::size_t i = ch.bus;
                for (std::size_t k = 0; k < n; ++k) {
                    const double g = ybus.G(i, k), b = ybus.B(i, k);
                    if (g == 0.0 && b == 0.0) continue;
                    if (g != 0.0) put(row, require(TermKind::C, i, k), g);
                    if (k != i && b != 0.0) put(row, require(TermKind::S, i, k), b);
                }
                break;
            }
            case pf::ChannelKind::Qinj: {
                const std::size_t i = ch.bus;
                for (std::size_t k = 0; k < n; ++k) {
                    const double g = ybus.G(i, k), b = ybus.B(i, k);
                    if (g == 0.0 && b == 0.0) continue;
                    if (b != 0.0) put(row, require(TermKind::C, i, k), -b);
                    if (k != i && g != 0.0) put(row, require(TermKind::S, i, k), g);
                }
                break;
            }
            case pf::ChannelKind::Pflow: {
                const auto& ba = branch_adm[branch_slot[ch.branch]];
                const std::size_t i = ba.from_bus, k = ba.to_bus;
                put(row, require(TermKind::C, i, i), ba.y_ff.real());
                put(row, require(TermKind::C, i, k), ba.y_ft.real());
                put(row, require(TermKind::S, i, k), ba.y_ft.imag());
                break;
            }
            case pf::ChannelKind::Qflow: {
                const auto& ba = branch_adm[branch_slot[ch.branch]];
                const std::size_t i = ba.from_bus, k = ba.to_bus;
                put(row, require(TermKind::C, i, i), -ba.y_ff.imag());
                put(row, require(TermKind::C, i, k), -ba.y_ft.imag());
                put(row, require(TermKind::S, i, k), ba.y_ft.real());
                break;
            }
        }
    }
    return map;
}

std::string LiftedBasisSpec::to_json() const {
    nlohmann::json j;
    j["mode"] = (mode == BasisMode::Dense) ? "dense" : "sparse";
    j["n"] = n;
    nlohmann::json terms_json = nlohmann::json::array();
    for (const auto& term : terms)
        terms_json.push_back({std::string(1, kind_letter(term.kind)), term.i, term.k});
    j["terms"] = std::move(terms_json);
    return j.dump();
}

LiftedBasisSpec LiftedBasisSpec::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    LiftedBasisSpec spec;
    spec.n = j.at("n").get<std::size_t>();
    spec.mode = j.at("mode").get<std::string>() == "dense" ? BasisMode::Dense : BasisMode::Sparse;
    for (const auto& t : j.at("terms")) {
        const std::string kind = t.at(0).get<std::string>();
        BasisTerm term;
        term.kind = kind == "V" ? TermKind::V : (kind == "C" ? TermKind::C : TermKind::S);
        term.i = t.at(1).get<std::size_t>();
        term.k = t.at(2).get<std::size_t>();
        spec.terms.push_back(term);
    }
    return spec;
}

}  // namespace fdilab::basis
