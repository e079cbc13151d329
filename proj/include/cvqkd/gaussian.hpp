#pragma once

// Covariance-matrix algebra for zero-mean Gaussian states.
//
// Quadratures are ordered (x1, p1, x2, p2, ...) and expressed in shot-noise
// units, so the vacuum has covariance matrix I2 for every mode.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cvqkd {

enum class Quadrature { X, P };

/// Symmetric 2n x 2n matrix of quadrature second moments.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Eigen::MatrixXd m);

    static CovarianceMatrix vacuum(int modes);
    static CovarianceMatrix thermal(double variance);
    /// Two-mode squeezed vacuum with marginal variance v.
    static CovarianceMatrix epr(double v);

    int modes() const noexcept { return static_cast<int>(m_.rows() / 2); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    /// 2x2 block coupling mode i to mode j.
    Eigen::Matrix2d block(int mode_i, int mode_j) const;

    /// Reduced state on the listed modes, in the listed order (partial trace).
    CovarianceMatrix reduce(std::span<const int> keep) const;

private:
    Eigen::MatrixXd m_;
};

CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b);

/// The (a, b, c) block form [[a I2, c Z], [c Z, b I2]] with Z = diag(1, -1).
struct TwoModeSymmetricCM {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;

    CovarianceMatrix to_cm() const;
};

/// Symplectic eigenvalues, sorted descending.
struct SymplecticSpectrum {
    std::vector<double> eigenvalues;
};

Eigen::MatrixXd symplectic_form(int modes);

SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& cm);

/// Entropy in bits of a thermal mode with symplectic eigenvalue nu.
double entropy_of_mode(double nu);

double von_neumann_entropy(const CovarianceMatrix& cm);

/// Two-mode squeezer on (mode_i, mode_j):
///   x_i' = sqrt(eta) x_i + sqrt(eta-1) x_j,   p_i' = sqrt(eta) p_i - sqrt(eta-1) p_j
/// and symmetrically for mode_j.
CovarianceMatrix apply_two_mode_squeezer(const CovarianceMatrix& cm, int mode_i, int mode_j, double eta);

/// Beamsplitter of transmission T acting as
///   q_i' =  sqrt(T) q_i + sqrt(1-T) q_j
///   q_j' = -sqrt(1-T) q_i + sqrt(T) q_j
/// for both quadratures q.
CovarianceMatrix apply_beamsplitter(const CovarianceMatrix& cm, int mode_i, int mode_j, double transmission);

/// State of the remaining modes after a homodyne measurement of one
/// quadrature of `mode`. The measured mode is removed.
CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& cm, int mode, Quadrature quadrature);

/// Heterodyne as vacuum ancilla C + balanced beamsplitter + x homodyne on
/// the measured output. C stays in the result as the last mode.
CovarianceMatrix condition_on_heterodyne(const CovarianceMatrix& cm, int mode);

}  // namespace cvqkd
