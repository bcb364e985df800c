#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fdilab/powerflow.hpp"

namespace fdilab::pf {

Dispatch default_dispatch(const grid::NetworkCase& net) {
    return scaled_dispatch(net, 1.0);
}

Vector setpoint_vm(const grid::NetworkCase& net) {
    Vector v(net.n_bus());
    for (std::size_t i = 0; i < net.n_bus(); ++i) v[i] = net.buses[i].v_setpoint;
    for (const auto& gen : net.gens)
        if (gen.in_service) v[gen.bus] = gen.vg;
    return v;
}

Dispatch scaled_dispatch(const grid::NetworkCase& net, double scale) {
    const std::size_t n = net.n_bus();
    Dispatch d;
    d.p_set.assign(n, 0.0);
    d.q_set.assign(n, 0.0);
    d.v_set.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        d.p_set[i] = -scale * net.buses[i].p_load;
        d.q_set[i] = -scale * net.buses[i].q_load;
        d.v_set[i] = net.buses[i].v_setpoint;
    }
    for (const auto& gen : net.gens) {
        if (!gen.in_service) continue;
        d.p_set[gen.bus] += scale * gen.pg;
        d.q_set[gen.bus] += scale * gen.qg;
        d.v_set[gen.bus] = gen.vg;
    }
    return d;
}

PowerFlowResult solve_powerflow(const grid::NetworkCase& net, const Dispatch& dispatch,
                                const PowerFlowOptions& options) {
    const std::size_t n = net.n_bus();
    const std::size_t slack = net.slack_index();

    // Unknowns: va at non-slack buses, vm at PQ buses.
    std::vector<std::size_t> va_buses, vm_buses;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == slack) continue;
        va_buses.push_back(i);
        if (net.buses[i].kind == grid::BusKind::PQ) vm_buses.push_back(i);
    }
    FreeStateLayout layout{va_buses, vm_buses};

    // Mismatch channels: P at non-slack buses, Q at PQ buses.
    MeasurementSchema mismatch_schema;
    Vector target;
    for (std::size_t i : va_buses) {
        mismatch_schema.channels.push_back({ChannelKind::Pinj, i, 0});
        target.push_back(dispatch.p_set[i]);
    }
    for (std::size_t i : vm_buses) {
        mismatch_schema.channels.push_back({ChannelKind::Qinj, i, 0});
        target.push_back(dispatch.q_set[i]);
    }
    MeasurementEvaluator eval(net, mismatch_schema);

    StateVector state = StateVector::flat(net);
    state.vm[slack] = dispatch.v_set[slack];
    for (std::size_t i = 0; i < n; ++i)
        if (net.buses[i].kind == grid::BusKind::PV) state.vm[i] = dispatch.v_set[i];
    if (options.initial) {
        state = *options.initial;
        state.va[slack] = 0.0;
        state.vm[slack] = dispatch.v_set[slack];
        for (std::size_t i = 0; i < n; ++i)
            if (net.buses[i].kind == grid::BusKind::PV) state.vm[i] = dispatch.v_set[i];
    }

    PowerFlowResult result;
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        Vector h = eval.measure(state);
        Vector mismatch(h.size());
        double worst = 0.0;
        for (std::size_t r = 0; r < h.size(); ++r) {
            mismatch[r] = target[r] - h[r];
            worst = std::max(worst, std::abs(mismatch[r]));
        }
        if (!std::isfinite(worst))
            throw std::runtime_error("power flow diverged (non-finite mismatch)");
        result.iterations = iter;
        result.max_mismatch = worst;
        if (worst <= options.tolerance) {
            result.state = state;
            return result;
        }
        if (iter == options.max_iterations) break;

        Matrix J = eval.jacobian(state, layout);
        LuFactors f = lu_factor(std::move(J));
        if (f.singular) throw std::runtime_error("power flow Jacobian is singular");
        Vector step = lu_solve(f, mismatch);
        Vector free = layout.extract(state);
        for (std::size_t j = 0; j < free.size(); ++j) free[j] += step[j];
        layout.apply(free, state);
    }

    std::ostringstream os;
    os << "power flow did not converge in " << options.max_iterations
       << " iterations (final mismatch " << result.max_mismatch << " p.u.)";
    throw std::runtime_error(os.str());
}

}  // namespace fdilab::pf
