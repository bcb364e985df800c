#include <cmath>
#include <stdexcept>

#include "fdilab/powerflow.hpp"

namespace fdilab::pf {

StateVector StateVector::flat(const grid::NetworkCase& net) {
    StateVector s;
    s.vm.assign(net.n_bus(), 1.0);
    s.va.assign(net.n_bus(), 0.0);
    return s;
}

std::vector<std::string> MeasurementSchema::channel_ids(const grid::NetworkCase& net) const {
    std::vector<std::string> ids;
    ids.reserve(channels.size());
    for (const auto& ch : channels) {
        switch (ch.kind) {
            case ChannelKind::Pinj:
                ids.push_back("P_" + std::to_string(net.buses[ch.bus].ext_id));
                break;
            case ChannelKind::Qinj:
                ids.push_back("Q_" + std::to_string(net.buses[ch.bus].ext_id));
                break;
            case ChannelKind::Vmag:
                ids.push_back("V_" + std::to_string(net.buses[ch.bus].ext_id));
                break;
            case ChannelKind::Pflow: {
                const auto& br = net.branches[ch.branch];
                ids.push_back("PF_" + std::to_string(net.buses[br.from_bus].ext_id) + "_" +
                              std::to_string(net.buses[br.to_bus].ext_id));
                break;
            }
            case ChannelKind::Qflow: {
                const auto& br = net.branches[ch.branch];
                ids.push_back("QF_" + std::to_string(net.buses[br.from_bus].ext_id) + "_" +
                              std::to_string(net.buses[br.to_bus].ext_id));
                break;
            }
        }
    }
    return ids;
}

std::uint64_t MeasurementSchema::hash(const grid::NetworkCase& net) const {
    // FNV-1a over the channel id list
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& id : channel_ids(net)) {
        for (char c : id) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        h ^= '\n';
        h *= 1099511628211ULL;
    }
    return h;
}

MeasurementSchema default_schema(const grid::NetworkCase& net) {
    MeasurementSchema schema;
    const std::size_t n = net.n_bus();
    for (std::size_t i = 0; i < n; ++i) schema.channels.push_back({ChannelKind::Pinj, i, 0});
    for (std::size_t i = 0; i < n; ++i) schema.channels.push_back({ChannelKind::Qinj, i, 0});
    for (std::size_t l : net.in_service_branches())
        schema.channels.push_back({ChannelKind::Pflow, 0, l});
    for (std::size_t l : net.in_service_branches())
        schema.channels.push_back({ChannelKind::Qflow, 0, l});
    for (std::size_t i = 0; i < n; ++i) schema.channels.push_back({ChannelKind::Vmag, i, 0});
    return schema;
}

MeasurementSchema pinj_only_schema(const grid::NetworkCase& net) {
    MeasurementSchema schema;
    for (std::size_t i = 0; i < net.n_bus(); ++i)
        schema.channels.push_back({ChannelKind::Pinj, i, 0});
    return schema;
}

Vector NoiseModel::weights() const {
    Vector w(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!(sigma[i] > 0.0)) throw std::invalid_argument("noise sigma must be positive");
        w[i] = 1.0 / (sigma[i] * sigma[i]);
    }
    return w;
}

FreeStateLayout FreeStateLayout::standard(const grid::NetworkCase& net) {
    FreeStateLayout layout;
    const std::size_t slack = net.slack_index();
    for (std::size_t i = 0; i < net.n_bus(); ++i) {
        if (i == slack) continue;
        layout.va_buses.push_back(i);
    }
    for (std::size_t i = 0; i < net.n_bus(); ++i) {
        if (i == slack) continue;
        layout.vm_buses.push_back(i);
    }
    return layout;
}

FreeStateLayout FreeStateLayout::angles_only(const grid::NetworkCase& net) {
    FreeStateLayout layout;
    const std::size_t slack = net.slack_index();
    for (std::size_t i = 0; i < net.n_bus(); ++i) {
        if (i == slack) continue;
        layout.va_buses.push_back(i);
    }
    return layout;
}

Vector FreeStateLayout::extract(const StateVector& state) const {
    Vector free;
    free.reserve(size());
    for (std::size_t b : va_buses) free.push_back(state.va[b]);
    for (std::size_t b : vm_buses) free.push_back(state.vm[b]);
    return free;
}

void FreeStateLayout::apply(const Vector& free, StateVector& state) const {
    if (free.size() != size()) throw std::invalid_argument("free state size mismatch");
    std::size_t k = 0;
    for (std::size_t b : va_buses) state.va[b] = free[k++];
    for (std::size_t b : vm_buses) state.vm[b] = free[k++];
}

MeasurementEvaluator::MeasurementEvaluator(const grid::NetworkCase& net,
                                           MeasurementSchema schema)
    : net_(net), schema_(std::move(schema)), ybus_(grid::build_ybus(net)),
      branch_adm_(grid::branch_params(net)) {
    const std::size_t n = net_.n_bus();
    bus_neighbors_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (i == k) continue;
            if (ybus_.G(i, k) != 0.0 || ybus_.B(i, k) != 0.0) bus_neighbors_[i].push_back(k);
        }
    }
    branch_slot_.assign(net_.branches.size(), static_cast<std::size_t>(-1));
    for (std::size_t s = 0; s < branch_adm_.size(); ++s)
        branch_slot_[branch_adm_[s].branch_index] = s;

    for (const auto& ch : schema_.channels) {
        if (ch.kind == ChannelKind::Pflow || ch.kind == ChannelKind::Qflow) {
            if (ch.branch >= net_.branches.size() ||
                branch_slot_[ch.branch] == static_cast<std::size_t>(-1))
                throw std::invalid_argument("schema references missing or out-of-service branch");
        } else if (ch.bus >= n) {
            throw std::invalid_argument("schema references unknown bus");
        }
    }
}

double MeasurementEvaluator::measure_channel(const Channel& ch, const StateVector& st) const {
    auto cos_term = [&](std::size_t i, std::size_t k) {
        return st.vm[i] * st.vm[k] * std::cos(st.va[i] - st.va[k]);
    };
    auto sin_term = [&](std::size_t i, std::size_t k) {
        return st.vm[i] * st.vm[k] * std::sin(st.va[i] - st.va[k]);
    };

    switch (ch.kind) {
        case ChannelKind::Vmag:
            return st.vm[ch.bus];
        case ChannelKind::Pinj: {
            const std::size_t i = ch.bus;
            double p = ybus_.G(i, i) * st.vm[i] * st.vm[i];
            for (std::size_t k : bus_neighbors_[i])
                p += ybus_.G(i, k) * cos_term(i, k) + ybus_.B(i, k) * sin_term(i, k);
            return p;
        }
        case ChannelKind::Qinj: {
            const std::size_t i = ch.bus;
            double q = -ybus_.B(i, i) * st.vm[i] * st.vm[i];
            for (std::size_t k : bus_neighbors_[i])
                q += ybus_.G(i, k) * sin_term(i, k) - ybus_.B(i, k) * cos_term(i, k);
            return q;
        }
        case ChannelKind::Pflow: {
            const auto& ba = branch_adm_[branch_slot_[ch.branch]];
            const std::size_t i = ba.from_bus, k = ba.to_bus;
            return st.vm[i] * st.vm[i] * ba.y_ff.real() +
                   cos_term(i, k) * ba.y_ft.real() + sin_term(i, k) * ba.y_ft.imag();
        }
        case ChannelKind::Qflow: {
            const auto& ba = branch_adm_[branch_slot_[ch.branch]];
            const std::size_t i = ba.from_bus, k = ba.to_bus;
            return -st.vm[i] * st.vm[i] * ba.y_ff.imag() +
                   sin_term(i, k) * ba.y_ft.real() - cos_term(i, k) * ba.y_ft.imag();
        }
    }
    throw std::logic_error("unreachable channel kind");
}

Vector MeasurementEvaluator::measure(const StateVector& st) const {
    if (st.n_bus() != net_.n_bus())
        throw std::invalid_argument("state dimension does not match network");
    Vector z(schema_.size());
    for (std::size_t c = 0; c < schema_.channels.size(); ++c)
        z[c] = measure_channel(schema_.channels[c], st);
    return z;
}

Matrix MeasurementEvaluator::jacobian(const StateVector& st,
                                      const FreeStateLayout& layout) const {
    const std::size_t n = net_.n_bus();
    const std::size_t m = schema_.size();
    std::vector<int> va_col(n, -1), vm_col(n, -1);
    for (std::size_t j = 0; j < layout.va_buses.size(); ++j)
        va_col[layout.va_buses[j]] = static_cast<int>(j);
    for (std::size_t j = 0; j < layout.vm_buses.size(); ++j)
        vm_col[layout.vm_buses[j]] = static_cast<int>(layout.va_buses.size() + j);

    Matrix J(m, layout.size());
    auto set_va = [&](std::size_t row, std::size_t bus, double v) {
        if (va_col[bus] >= 0) J(row, static_cast<std::size_t>(va_col[bus])) += v;
    };
    auto set_vm = [&](std::size_t row, std::size_t bus, double v) {
        if (vm_col[bus] >= 0) J(row, static_cast<std::size_t>(vm_col[bus])) += v;
    };

    for (std::size_t row = 0; row < m; ++row) {
        const auto& ch = schema_.channels[row];
        switch (ch.kind) {
            case ChannelKind::Vmag:
                set_vm(row, ch.bus, 1.0);
                break;
            case ChannelKind::Pinj: {
                const std::size_t i = ch.bus;
                double dva_i = 0.0;
                double dvm_i = 2.0 * ybus_.G(i, i) * st.vm[i];
                for (std::size_t k : bus_neighbors_[i]) {
                    const double ct = std::cos(st.va[i] - st.va[k]);
                    const double stheta = std::sin(st.va[i] - st.va[k]);
                    const double C = st.vm[i] * st.vm[k] * ct;
                    const double S = st.vm[i] * st.vm[k] * stheta;
                    const double gik = ybus_.G(i, k), bik = ybus_.B(i, k);
                    dva_i += -gik * S + bik * C;
                    set_va(row, k, gik * S - bik * C);
                    dvm_i += gik * st.vm[k] * ct + bik * st.vm[k] * stheta;
                    set_vm(row, k, gik * st.vm[i] * ct + bik * st.vm[i] * stheta);
                }
                set_va(row, i, dva_i);
                set_vm(row, i, dvm_i);
                break;
            }
            case ChannelKind::Qinj: {
                const std::size_t i = ch.bus;
                double dva_i = 0.0;
                double dvm_i = -2.0 * ybus_.B(i, i) * st.vm[i];
                for (std::size_t k : bus_neighbors_[i]) {
                    const double ct = std::cos(st.va[i] - st.va[k]);
                    const double stheta = std::sin(st.va[i] - st.va[k]);
                    const double C = st.vm[i] * st.vm[k] * ct;
                    const double S = st.vm[i] * st.vm[k] * stheta;
                    const double gik = ybus_.G(i, k), bik = ybus_.B(i, k);
                    dva_i += gik * C + bik * S;
                    set_va(row, k, -(gik * C + bik * S));
                    dvm_i += gik * st.vm[k] * stheta - bik * st.vm[k] * ct;
                    set_vm(row, k, gik * st.vm[i] * stheta - bik * st.vm[i] * ct);
                }
                set_va(row, i, dva_i);
                set_vm(row, i, dvm_i);
                break;
            }
            case ChannelKind::Pflow: {
                const auto& ba = branch_adm_[branch_slot_[ch.branch]];
                const std::size_t i = ba.from_bus, k = ba.to_bus;
                const double ct = std::cos(st.va[i] - st.va[k]);
                const double stheta = std::sin(st.va[i] - st.va[k]);
                const double C = st.vm[i] * st.vm[k] * ct;
                const double S = st.vm[i] * st.vm[k] * stheta;
                const double gft = ba.y_ft.real(), bft = ba.y_ft.imag();
                set_vm(row, i, 2.0 * st.vm[i] * ba.y_ff.real() + st.vm[k] * (ct * gft + stheta * bft));
                set_vm(row, k, st.vm[i] * (ct * gft + stheta * bft));
                set_va(row, i, -S * gft + C * bft);
                set_va(row, k, S * gft - C * bft);
                break;
            }
            case ChannelKind::Qflow: {
                const auto& ba = branch_adm_[branch_slot_[ch.branch]];
                const std::size_t i = ba.from_bus, k = ba.to_bus;
                const double ct = std::cos(st.va[i] - st.va[k]);
                const double stheta = std::sin(st.va[i] - st.va[k]);
                const double C = st.vm[i] * st.vm[k] * ct;
                const double S = st.vm[i] * st.vm[k] * stheta;
                const double gft = ba.y_ft.real(), bft = ba.y_ft.imag();
                set_vm(row, i, -2.0 * st.vm[i] * ba.y_ff.imag() + st.vm[k] * (stheta * gft - ct * bft));
                set_vm(row, k, st.vm[i] * (stheta * gft - ct * bft));
                set_va(row, i, C * gft + S * bft);
                set_va(row, k, -(C * gft + S * bft));
                break;
            }
        }
    }
    return J;
}

Vector measure(const StateVector& state, const grid::NetworkCase& net,
               const MeasurementSchema& schema) {
    return MeasurementEvaluator(net, schema).measure(state);
}

Matrix measurement_jacobian(const StateVector& state, const grid::NetworkCase& net,
                            const MeasurementSchema& schema,
                            const FreeStateLayout& layout) {
    return MeasurementEvaluator(net, schema).jacobian(state, layout);
}

}  // namespace fdilab::pf
