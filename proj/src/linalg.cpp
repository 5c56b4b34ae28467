#include "pqf/linalg.hpp"

#include <bit>
#include <numeric>

#include "pqf/combinatorics.hpp"
#include "pqf/errors.hpp"

namespace pqf {

FockPattern FockPattern::from_modes(std::span<const int> modes, int m) {
    FockPattern p = zeros(m);
    for (int mode : modes) {
        if (mode < 0 || mode >= m) throw InvalidDimension("mode index out of range");
        ++p.occupations[mode];
    }
    return p;
}

int FockPattern::total() const {
    return std::accumulate(occupations.begin(), occupations.end(), 0);
}

bool FockPattern::collision_free() const {
    for (int o : occupations) {
        if (o > 1) return false;
    }
    return true;
}

std::vector<int> FockPattern::support() const {
    std::vector<int> s;
    for (int i = 0; i < modes(); ++i) {
        if (occupations[i] > 0) s.push_back(i);
    }
    return s;
}

std::vector<int> FockPattern::mode_list() const {
    std::vector<int> s;
    for (int i = 0; i < modes(); ++i) {
        for (int k = 0; k < occupations[i]; ++k) s.push_back(i);
    }
    return s;
}

double Unitary::unitarity_defect(const ComplexMatrix& u) {
    const ComplexMatrix gram = u.adjoint() * u;
    const ComplexMatrix id = ComplexMatrix::Identity(u.rows(), u.cols());
    return (gram - id).cwiseAbs().maxCoeff();
}

Unitary::Unitary(ComplexMatrix u, double tolerance) : u_(std::move(u)) {
    if (u_.rows() != u_.cols() || u_.rows() < 1) {
        throw InvalidDimension("unitary must be square with dimension >= 1");
    }
    const double defect = unitarity_defect(u_);
    if (defect > tolerance) {
        throw ShapeError("matrix fails the unitarity check, defect " + std::to_string(defect));
    }
}

Unitary haar_random_unitary(int m, rng::Stream& stream) {
    if (m < 1) throw InvalidDimension("mode count must be >= 1");
    ComplexMatrix z(m, m);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) z(r, c) = stream.complex_gaussian();
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the phase ambiguity of QR so that Q follows the Haar measure.
    for (int c = 0; c < m; ++c) {
        const std::complex<double> d = r(c, c);
        const double a = std::abs(d);
        const std::complex<double> phase = a > 0 ? d / a : std::complex<double>(1.0, 0.0);
        q.col(c) *= phase;
    }
    return Unitary(std::move(q));
}

Unitary haar_random_unitary(int m, std::uint64_t seed) {
    rng::Stream stream(seed);
    return haar_random_unitary(m, stream);
}

ComplexMatrix submatrix_for(const Unitary& u, const FockPattern& input, const FockPattern& output) {
    const int m = u.dim();
    if (input.modes() != m || output.modes() != m) {
        throw ShapeError("pattern length does not match the unitary dimension");
    }
    const int n = input.total();
    if (output.total() != n) {
        throw ShapeError("input and output patterns must have equal photon totals");
    }
    const std::vector<int> rows = output.mode_list();
    const std::vector<int> cols = input.mode_list();
    ComplexMatrix sub(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) sub(r, c) = u(rows[r], cols[c]);
    }
    return sub;
}

std::complex<double> permanent(const ComplexMatrix& mat) {
    if (mat.rows() != mat.cols()) throw ShapeError("permanent requires a square matrix");
    const int n = static_cast<int>(mat.rows());
    if (n == 0) return {1.0, 0.0};
    if (n == 1) return mat(0, 0);
    if (n > 62) throw BudgetExceeded("permanent dimension too large for exact evaluation");

    // Ryser: perm(A) = (-1)^n sum_{S != empty} (-1)^{|S|} prod_i sum_{j in S} a_ij,
    // visiting subsets in Gray-code order so each step updates one column.
    std::vector<std::complex<double>> row_sums(n, {0.0, 0.0});
    std::complex<double> total{0.0, 0.0};
    const std::uint64_t count = 1ULL << n;
    int parity = 1; // (-1)^{|S|} of the current subset
    for (std::uint64_t g = 1; g < count; ++g) {
        const int bit = std::countr_zero(g);
        const std::uint64_t gray = g ^ (g >> 1);
        const bool added = (gray >> bit) & 1ULL;
        if (added) {
            for (int i = 0; i < n; ++i) row_sums[i] += mat(i, bit);
        } else {
            for (int i = 0; i < n; ++i) row_sums[i] -= mat(i, bit);
        }
        parity = -parity;
        std::complex<double> prod = row_sums[0];
        for (int i = 1; i < n; ++i) prod *= row_sums[i];
        total += parity > 0 ? prod : -prod;
    }
    return (n % 2 == 0) ? total : -total;
}

double ideal_probability(const Unitary& u, const FockPattern& input, const FockPattern& output) {
    const ComplexMatrix sub = submatrix_for(u, input, output);
    const std::complex<double> p = permanent(sub);
    double denom = 1.0;
    for (int o : output.occupations) denom *= comb::factorial(o);
    for (int o : input.occupations) denom *= comb::factorial(o);
    return std::norm(p) / denom;
}

}  // namespace pqf
