#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "pqf/config.hpp"
#include "pqf/rng.hpp"

namespace pqf {

// Dense complex matrix. Row-major semantics at the serialization boundary;
// Eigen handles storage internally.
using ComplexMatrix = Eigen::MatrixXcd;

// Occupation-number vector over the optical modes.
struct FockPattern {
    std::vector<int> occupations;

    FockPattern() = default;
    explicit FockPattern(std::vector<int> occ) : occupations(std::move(occ)) {}
    static FockPattern zeros(int m) { return FockPattern(std::vector<int>(m, 0)); }
    // Pattern with one photon in each listed mode (modes may repeat).
    static FockPattern from_modes(std::span<const int> modes, int m);

    int modes() const { return static_cast<int>(occupations.size()); }
    int total() const;
    bool collision_free() const;
    // Distinct occupied modes, ascending.
    std::vector<int> support() const;
    // Occupied modes with multiplicity, ascending.
    std::vector<int> mode_list() const;

    bool operator==(const FockPattern&) const = default;
};

// An m x m matrix verified to be unitary on construction.
class Unitary {
  public:
    explicit Unitary(ComplexMatrix u, double tolerance = default_config().tol.unitarity);

    int dim() const { return static_cast<int>(u_.rows()); }
    const ComplexMatrix& matrix() const { return u_; }
    std::complex<double> operator()(int r, int c) const { return u_(r, c); }

    static double unitarity_defect(const ComplexMatrix& u);

  private:
    ComplexMatrix u_;
};

// Haar-distributed random unitary: complex Ginibre matrix, QR decomposition,
// then the R-diagonal phase correction that makes the distribution exactly Haar.
Unitary haar_random_unitary(int m, std::uint64_t seed);
Unitary haar_random_unitary(int m, rng::Stream& stream);

// Scattering submatrix: s_i copies of row i of U, then t_j copies of column j,
// for output pattern S and input pattern T of equal total n. Result is n x n.
ComplexMatrix submatrix_for(const Unitary& u, const FockPattern& input, const FockPattern& output);

// Exact permanent, Ryser's formula with Gray-code subset updates, O(n 2^n).
// The permanent of the empty matrix is 1.
std::complex<double> permanent(const ComplexMatrix& m);

// Probability of detecting `output` when `input` photons enter the
// interferometer: |Perm(U_{T,S})|^2 normalized by the occupation factorials
// of both patterns (the input factor is 1 for the collision-free inputs the
// protocol uses).
double ideal_probability(const Unitary& u, const FockPattern& input, const FockPattern& output);

}  // namespace pqf
