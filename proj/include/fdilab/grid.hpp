#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace fdilab::grid {

enum class BusKind { PQ, PV, Slack };

struct BusRecord {
    int ext_id = 0;           // bus number as written in the case file
    BusKind kind = BusKind::PQ;
    double p_load = 0.0;      // p.u. on system base
    double q_load = 0.0;
    double g_shunt = 0.0;     // p.u.
    double b_shunt = 0.0;
    double v_setpoint = 1.0;  // p.u. (file Vm column)
    double base_kv = 0.0;
};

struct BranchRecord {
    std::size_t from_bus = 0;  // internal index
    std::size_t to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;
    double tap = 1.0;
    double shift = 0.0;        // rad
    bool in_service = true;
};

struct GenRecord {
    std::size_t bus = 0;       // internal index
    double pg = 0.0;           // p.u.
    double qg = 0.0;
    double vg = 1.0;
    bool in_service = true;
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<BusRecord> buses;      // internal order 0..n-1
    std::vector<BranchRecord> branches;
    std::vector<GenRecord> gens;

    std::size_t n_bus() const { return buses.size(); }
    std::size_t slack_index() const;
    std::size_t internal_index(int ext_id) const;  // throws on unknown id

    // In-service branches in branch-list order.
    std::vector<std::size_t> in_service_branches() const;

    // Neighbor sets over in-service branches (no self loops, parallels merged).
    std::vector<std::vector<std::size_t>> adjacency() const;
};

struct AdmittanceMatrix {
    std::size_t n = 0;
    std::vector<double> g;  // row-major n x n
    std::vector<double> b;

    double G(std::size_t i, std::size_t k) const { return g[i * n + k]; }
    double B(std::size_t i, std::size_t k) const { return b[i * n + k]; }
};

// Two-port admittance blocks of one branch (from MATPOWER's branch model):
//   I_f = y_ff V_f + y_ft V_t,  I_t = y_tf V_f + y_tt V_t.
struct BranchAdmittance {
    std::size_t branch_index = 0;  // index into NetworkCase::branches
    std::size_t from_bus = 0;
    std::size_t to_bus = 0;
    double g_series = 0.0;         // Re(1/(r+jx))
    double b_series = 0.0;         // Im(1/(r+jx))
    std::complex<double> y_ff, y_ft, y_tf, y_tt;
};

// Parse a MATPOWER M-file (the subset with mpc.baseMVA / mpc.bus /
// mpc.branch / mpc.gen blocks). Loads and shunts are converted to per unit;
// tap = 0 is normalized to 1; shift is converted from degrees to radians.
// Throws std::runtime_error with a line number on malformed input.
NetworkCase parse_matpower_case(const std::string& text, const std::string& name = "");

NetworkCase load_case_file(const std::string& path);

// Resolve the path of a bundled case ("case14", "case30", ...). Looks in
// FDILAB_DATA_DIR when set, otherwise in the build-time data directory.
std::string bundled_case_path(const std::string& name);
NetworkCase load_bundled_case(const std::string& name);

// Canonical M-file form; parse(serialize(parse(text))) == parse(text).
std::string to_matpower_string(const NetworkCase& net);

AdmittanceMatrix build_ybus(const NetworkCase& net);

// Series/shunt parameters per in-service branch, in branch-list order.
std::vector<BranchAdmittance> branch_params(const NetworkCase& net);

bool same_network(const NetworkCase& a, const NetworkCase& b, double tol = 0.0);

}  // namespace fdilab::grid
