#include <cmath>
#include <complex>
#include <sstream>
#include <iomanip>

#include "fdilab/grid.hpp"

namespace fdilab::grid {
namespace {

constexpr double kPi = 3.14159265358979323846;

int bus_type_code(BusKind kind) {
    switch (kind) {
        case BusKind::PQ: return 1;
        case BusKind::PV: return 2;
        case BusKind::Slack: return 3;
    }
    return 1;
}

void put(std::ostringstream& os, double v) {
    os << '\t' << std::setprecision(17) << v;
}

}  // namespace

std::string to_matpower_string(const NetworkCase& net) {
    std::ostringstream os;
    os << "function mpc = " << (net.name.empty() ? "case_export" : net.name) << "\n";
    os << "mpc.version = '2';\n";
    os << "mpc.baseMVA = " << std::setprecision(17) << net.base_mva << ";\n";

    os << "mpc.bus = [\n";
    for (const auto& bus : net.buses) {
        os << '\t' << bus.ext_id << '\t' << bus_type_code(bus.kind);
        put(os, bus.p_load * net.base_mva);
        put(os, bus.q_load * net.base_mva);
        put(os, bus.g_shunt * net.base_mva);
        put(os, bus.b_shunt * net.base_mva);
        os << "\t1";  // area
        put(os, bus.v_setpoint);
        os << "\t0";  // Va
        put(os, bus.base_kv);
        os << "\t1\t1.1\t0.9;\n";  // zone, Vmax, Vmin
    }
    os << "];\n";

    os << "mpc.gen = [\n";
    for (const auto& gen : net.gens) {
        os << '\t' << net.buses[gen.bus].ext_id;
        put(os, gen.pg * net.base_mva);
        put(os, gen.qg * net.base_mva);
        os << "\t9999\t-9999";
        put(os, gen.vg);
        put(os, net.base_mva);
        os << '\t' << (gen.in_service ? 1 : 0) << "\t9999\t0;\n";
    }
    os << "];\n";

    os << "mpc.branch = [\n";
    for (const auto& br : net.branches) {
        os << '\t' << net.buses[br.from_bus].ext_id << '\t' << net.buses[br.to_bus].ext_id;
        put(os, br.r);
        put(os, br.x);
        put(os, br.b_charging);
        os << "\t0\t0\t0";
        put(os, br.tap);
        put(os, br.shift * 180.0 / kPi);
        os << '\t' << (br.in_service ? 1 : 0) << "\t-360\t360;\n";
    }
    os << "];\n";
    return os.str();
}

std::vector<BranchAdmittance> branch_params(const NetworkCase& net) {
    std::vector<BranchAdmittance> out;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        const auto& br = net.branches[l];
        if (!br.in_service) continue;
        BranchAdmittance ba;
        ba.branch_index = l;
        ba.from_bus = br.from_bus;
        ba.to_bus = br.to_bus;
        const std::complex<double> z(br.r, br.x);
        const std::complex<double> y = 1.0 / z;
        ba.g_series = y.real();
        ba.b_series = y.imag();
        const std::complex<double> ych(0.0, 0.5 * br.b_charging);
        const std::complex<double> tap = std::polar(br.tap, br.shift);
        ba.y_ff = (y + ych) / (br.tap * br.tap);
        ba.y_ft = -y / std::conj(tap);
        ba.y_tf = -y / tap;
        ba.y_tt = y + ych;
        out.push_back(ba);
    }
    return out;
}

AdmittanceMatrix build_ybus(const NetworkCase& net) {
    const std::size_t n = net.n_bus();
    AdmittanceMatrix Y;
    Y.n = n;
    Y.g.assign(n * n, 0.0);
    Y.b.assign(n * n, 0.0);

    auto add = [&](std::size_t i, std::size_t k, std::complex<double> y) {
        Y.g[i * n + k] += y.real();
        Y.b[i * n + k] += y.imag();
    };

    for (const auto& ba : branch_params(net)) {
        add(ba.from_bus, ba.from_bus, ba.y_ff);
        add(ba.from_bus, ba.to_bus, ba.y_ft);
        add(ba.to_bus, ba.from_bus, ba.y_tf);
        add(ba.to_bus, ba.to_bus, ba.y_tt);
    }
    for (std::size_t i = 0; i < n; ++i)
        add(i, i, {net.buses[i].g_shunt, net.buses[i].b_shunt});
    return Y;
}

}  // namespace fdilab::grid
