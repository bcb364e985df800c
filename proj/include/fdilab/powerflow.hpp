#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fdilab/grid.hpp"
#include "fdilab/linalg.hpp"

namespace fdilab::pf {

// Per-bus voltage magnitudes (p.u.) and angles (rad).
struct StateVector {
    Vector vm;
    Vector va;

    std::size_t n_bus() const { return vm.size(); }

    static StateVector flat(const grid::NetworkCase& net);
};

enum class ChannelKind { Pinj, Qinj, Pflow, Qflow, Vmag };

struct Channel {
    ChannelKind kind;
    std::size_t bus = 0;     // internal bus index (injection / voltage channels)
    std::size_t branch = 0;  // index into NetworkCase::branches (flow channels)
};

struct MeasurementSchema {
    std::vector<Channel> channels;

    std::size_t size() const { return channels.size(); }

    // Stable text ids, e.g. "P_4", "PF_1_2" (external bus numbers).
    std::vector<std::string> channel_ids(const grid::NetworkCase& net) const;
    std::uint64_t hash(const grid::NetworkCase& net) const;
};

// All bus P injections, all bus Q injections, from-end P flows, from-end
// Q flows, all bus voltage magnitudes; m = 3n + 2L.
MeasurementSchema default_schema(const grid::NetworkCase& net);

// Only bus active power injections; m = n.
MeasurementSchema pinj_only_schema(const grid::NetworkCase& net);

struct NoiseModel {
    Vector sigma;  // per-channel std, p.u.

    Vector weights() const;  // 1/sigma^2
};

// Which state coordinates the estimator may move. Column order of all
// Jacobians: free angles (bus-index order), then free magnitudes.
struct FreeStateLayout {
    std::vector<std::size_t> va_buses;
    std::vector<std::size_t> vm_buses;

    std::size_t size() const { return va_buses.size() + vm_buses.size(); }

    // va and vm free at every non-slack bus (s = 2n-2).
    static FreeStateLayout standard(const grid::NetworkCase& net);
    // va free at every non-slack bus, vm fixed everywhere (s = n-1).
    static FreeStateLayout angles_only(const grid::NetworkCase& net);

    Vector extract(const StateVector& state) const;
    void apply(const Vector& free, StateVector& state) const;
};

// Precomputed admittances for repeated evaluation of h(x) and its Jacobian.
class MeasurementEvaluator {
public:
    MeasurementEvaluator(const grid::NetworkCase& net, MeasurementSchema schema);

    const MeasurementSchema& schema() const { return schema_; }
    const grid::NetworkCase& network() const { return net_; }
    std::size_t size() const { return schema_.size(); }

    Vector measure(const StateVector& state) const;
    double measure_channel(const Channel& ch, const StateVector& state) const;

    // m x layout.size() Jacobian of h restricted to the free coordinates.
    Matrix jacobian(const StateVector& state, const FreeStateLayout& layout) const;

private:
    grid::NetworkCase net_;
    MeasurementSchema schema_;
    grid::AdmittanceMatrix ybus_;
    std::vector<grid::BranchAdmittance> branch_adm_;
    std::vector<std::vector<std::size_t>> bus_neighbors_;  // incl. self couplings
    std::vector<std::size_t> branch_slot_;  // branch index -> branch_adm_ slot
};

Vector measure(const StateVector& state, const grid::NetworkCase& net,
               const MeasurementSchema& schema);
Matrix measurement_jacobian(const StateVector& state, const grid::NetworkCase& net,
                            const MeasurementSchema& schema,
                            const FreeStateLayout& layout);

// Net injection targets (p.u.) and voltage setpoints for the power flow.
struct Dispatch {
    Vector p_set;  // net P injection per bus (used at non-slack buses)
    Vector q_set;  // net Q injection per bus (used at PQ buses)
    Vector v_set;  // magnitude setpoint per bus (used at PV and slack buses)
};

// Dispatch as written in the case file (gen minus load, gen Vg setpoints).
Dispatch default_dispatch(const grid::NetworkCase& net);

// Per-bus magnitude setpoints: gen Vg at buses with an in-service generator,
// the bus Vm column elsewhere.
Vector setpoint_vm(const grid::NetworkCase& net);

// Loads scaled by `scale`, generator P scaled proportionally.
Dispatch scaled_dispatch(const grid::NetworkCase& net, double scale);

struct PowerFlowOptions {
    double tolerance = 1e-8;  // infinity norm of the p.u. mismatch
    int max_iterations = 20;
    std::optional<StateVector> initial;  // defaults to flat start
};

struct PowerFlowResult {
    StateVector state;
    int iterations = 0;
    double max_mismatch = 0.0;
};

// Newton-Raphson AC power flow. Throws std::runtime_error on divergence or
// when the mismatch tolerance is not met within max_iterations.
PowerFlowResult solve_powerflow(const grid::NetworkCase& net, const Dispatch& dispatch,
                                const PowerFlowOptions& options = {});

}  // namespace fdilab::pf
