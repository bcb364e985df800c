#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fdilab/grid.hpp"
#include "fdilab/linalg.hpp"
#include "fdilab/powerflow.hpp"

namespace fdilab::basis {

// One coordinate of the lifted representation:
//   V(i)   -> vm_i
//   C(i,k) -> vm_i * vm_k * cos(va_i - va_k)
//   S(i,k) -> vm_i * vm_k * sin(va_i - va_k)
enum class TermKind : unsigned char { V, C, S };

struct BasisTerm {
    TermKind kind;
    std::size_t i = 0;
    std::size_t k = 0;
};

std::string term_name(const BasisTerm& term);

enum class BasisMode { Dense, Sparse };

struct LiftedBasisSpec {
    std::size_t n = 0;
    BasisMode mode = BasisMode::Dense;
    std::vector<BasisTerm> terms;

    std::size_t size() const { return terms.size(); }

    // Index of a term, or -1 when absent. V terms use find(V, i, i).
    int find(TermKind kind, std::size_t i, std::size_t k) const;

    std::string to_json() const;
    static LiftedBasisSpec from_json(const std::string& text);

private:
    mutable std::vector<int> index_;  // lazy (kind, i, k) -> term lookup
    void build_index() const;
};

// Dense mode enumerates V(i) for all i and C/S over all ordered pairs
// including i = k (p = n + 2n^2). Sparse mode keeps V(i), C(i,i) and
// C/S(i,k) for neighbors k only; the identically-zero S(i,i) terms are
// dropped (p = 3n + 2*sum|N_i| - n).
LiftedBasisSpec build_basis_spec(const grid::NetworkCase& net, BasisMode mode);

Vector eval_basis(const LiftedBasisSpec& spec, const pf::StateVector& state);

// p x 2n derivative; column order: va for every bus, then vm for every bus.
Matrix basis_jacobian(const LiftedBasisSpec& spec, const pf::StateVector& state);

// dstate (length 2n, [va; vm]) += J_f(state)^T * df. Exploits the at most
// four nonzero partials each term has; this is the training hot path.
void accumulate_state_gradient(const LiftedBasisSpec& spec, const pf::StateVector& state,
                               const double* df, double* dstate);

// The oracle coefficient matrix with h(x) = A f(x), stored sparse by row.
struct LiftedMap {
    std::size_t m = 0;
    std::size_t p = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;

    Vector apply(const Vector& f) const;
    Matrix to_dense() const;
};

// Assembles A from the network admittances so that h(x) = A f(x) exactly,
// including branch charging, off-nominal taps and phase shifts. Throws when
// the spec lacks a required term (names the term).
LiftedMap assemble_lifted_map(const grid::NetworkCase& net,
                              const pf::MeasurementSchema& schema,
                              const LiftedBasisSpec& spec);

}  // namespace fdilab::basis
