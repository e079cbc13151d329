#include "cvqkd/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cvqkd/error.hpp"

namespace cvqkd {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPhysicalTol = 1e-6;
constexpr double kSingularTol = 1e-12;

void check_mode(const CovarianceMatrix& cm, int mode, const char* what) {
    if (mode < 0 || mode >= cm.modes()) {
        std::ostringstream os;
        os << what << " mode index " << mode << " out of range for " << cm.modes() << " modes";
        throw Error(ErrorKind::InvalidParameter, os.str());
    }
}

// M gamma M^T for a symplectic M, re-symmetrized against round-off.
CovarianceMatrix transform(const CovarianceMatrix& cm, const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = m * cm.matrix() * m.transpose();
    return CovarianceMatrix(0.5 * (out + out.transpose()));
}

}  // namespace

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0 || m_.rows() % 2 != 0) {
        throw Error(ErrorKind::InvalidParameter, "covariance matrix must be square with even dimension");
    }
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
        throw Error(ErrorKind::InvalidParameter, "covariance matrix is not symmetric");
    }
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
        if (!(m_(i, i) > 0.0)) {
            throw Error(ErrorKind::InvalidParameter, "covariance matrix diagonal must be strictly positive");
        }
    }
}

CovarianceMatrix CovarianceMatrix::vacuum(int modes) {
    if (modes < 1) throw Error(ErrorKind::InvalidParameter, "vacuum needs at least one mode");
    return CovarianceMatrix(Eigen::MatrixXd::Identity(2 * modes, 2 * modes));
}

CovarianceMatrix CovarianceMatrix::thermal(double variance) {
    if (!(variance >= 1.0)) throw Error(ErrorKind::InvalidParameter, "thermal variance must be >= 1");
    return CovarianceMatrix(variance * Eigen::MatrixXd::Identity(2, 2));
}

CovarianceMatrix CovarianceMatrix::epr(double v) {
    if (!(v >= 1.0)) throw Error(ErrorKind::InvalidParameter, "EPR variance must be >= 1");
    return TwoModeSymmetricCM{v, v, std::sqrt(v * v - 1.0)}.to_cm();
}

Eigen::Matrix2d CovarianceMatrix::block(int mode_i, int mode_j) const {
    check_mode(*this, mode_i, "block");
    check_mode(*this, mode_j, "block");
    return m_.block<2, 2>(2 * mode_i, 2 * mode_j);
}

CovarianceMatrix CovarianceMatrix::reduce(std::span<const int> keep) const {
    const auto n = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd out(2 * n, 2 * n);
    for (Eigen::Index r = 0; r < n; ++r) {
        check_mode(*this, keep[r], "reduce");
        for (Eigen::Index c = 0; c < n; ++c) {
            out.block<2, 2>(2 * r, 2 * c) = m_.block<2, 2>(2 * keep[r], 2 * keep[c]);
        }
    }
    return CovarianceMatrix(std::move(out));
}

CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b) {
    const auto na = a.matrix().rows();
    const auto nb = b.matrix().rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(na + nb, na + nb);
    out.topLeftCorner(na, na) = a.matrix();
    out.bottomRightCorner(nb, nb) = b.matrix();
    return CovarianceMatrix(std::move(out));
}

CovarianceMatrix TwoModeSymmetricCM::to_cm() const {
    Eigen::MatrixXd m(4, 4);
    m << a, 0, c, 0,
         0, a, 0, -c,
         c, 0, b, 0,
         0, -c, 0, b;
    return CovarianceMatrix(std::move(m));
}

Eigen::MatrixXd symplectic_form(int modes) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
    for (int k = 0; k < modes; ++k) {
        omega(2 * k, 2 * k + 1) = 1.0;
        omega(2 * k + 1, 2 * k) = -1.0;
    }
    return omega;
}

SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& cm) {
    const int n = cm.modes();
    // i*Omega*gamma has eigenvalues +-nu_k; Omega*gamma has +-i*nu_k.
    Eigen::EigenSolver<Eigen::MatrixXd> solver(symplectic_form(n) * cm.matrix(), false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "eigen-solver did not converge on Omega*gamma");
    }
    std::vector<double> moduli;
    moduli.reserve(2 * n);
    for (const auto& ev : solver.eigenvalues()) moduli.push_back(std::abs(ev));
    std::sort(moduli.begin(), moduli.end(), std::greater<>());

    SymplecticSpectrum spectrum;
    spectrum.eigenvalues.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double nu = 0.5 * (moduli[2 * k] + moduli[2 * k + 1]);
        if (nu < 1.0 - kPhysicalTol) {
            std::ostringstream os;
            os << "symplectic eigenvalue " << nu << " below 1";
            throw Error(ErrorKind::NonPhysicalState, os.str());
        }
        spectrum.eigenvalues.push_back(nu);
    }
    return spectrum;
}

double entropy_of_mode(double nu) {
    if (nu <= 1.0) return 0.0;
    const double plus = 0.5 * (nu + 1.0);
    const double minus = 0.5 * (nu - 1.0);
    return plus * std::log2(plus) - minus * std::log2(minus);
}

double von_neumann_entropy(const CovarianceMatrix& cm) {
    double s = 0.0;
    for (double nu : symplectic_eigenvalues(cm).eigenvalues) s += entropy_of_mode(nu);
    return s;
}

CovarianceMatrix apply_two_mode_squeezer(const CovarianceMatrix& cm, int mode_i, int mode_j, double eta) {
    if (!(eta >= 1.0)) throw Error(ErrorKind::InvalidParameter, "two-mode squeezer needs eta >= 1");
    check_mode(cm, mode_i, "squeezer");
    check_mode(cm, mode_j, "squeezer");
    if (mode_i == mode_j) throw Error(ErrorKind::InvalidParameter, "squeezer modes must be distinct");

    const double s = std::sqrt(eta);
    const double r = std::sqrt(eta - 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * cm.modes(), 2 * cm.modes());
    for (int q = 0; q < 2; ++q) {
        const double z = q == 0 ? 1.0 : -1.0;
        const int i = 2 * mode_i + q;
        const int j = 2 * mode_j + q;
        m(i, i) = s;
        m(j, j) = s;
        m(i, j) = z * r;
        m(j, i) = z * r;
    }
    return transform(cm, m);
}

CovarianceMatrix apply_beamsplitter(const CovarianceMatrix& cm, int mode_i, int mode_j, double transmission) {
    if (!(transmission > 0.0 && transmission <= 1.0)) {
        throw Error(ErrorKind::InvalidParameter, "beamsplitter transmission must lie in (0, 1]");
    }
    check_mode(cm, mode_i, "beamsplitter");
    check_mode(cm, mode_j, "beamsplitter");
    if (mode_i == mode_j) throw Error(ErrorKind::InvalidParameter, "beamsplitter modes must be distinct");

    const double t = std::sqrt(transmission);
    const double r = std::sqrt(1.0 - transmission);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * cm.modes(), 2 * cm.modes());
    for (int q = 0; q < 2; ++q) {
        const int i = 2 * mode_i + q;
        const int j = 2 * mode_j + q;
        m(i, i) = t;
        m(j, j) = t;
        m(i, j) = r;
        m(j, i) = -r;
    }
    return transform(cm, m);
}

CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& cm, int mode, Quadrature quadrature) {
    check_mode(cm, mode, "homodyne");
    if (cm.modes() < 2) throw Error(ErrorKind::InvalidParameter, "homodyne conditioning needs at least two modes");

    const int measured = 2 * mode + (quadrature == Quadrature::X ? 0 : 1);
    const double var = cm(measured, measured);
    if (var < kSingularTol) throw Error(ErrorKind::SingularConditioning, "measured quadrature variance is ~0");

    std::vector<int> rest;
    for (int k = 0; k < 2 * cm.modes(); ++k) {
        if (k / 2 != mode) rest.push_back(k);
    }
    const auto n = static_cast<Eigen::Index>(rest.size());
    Eigen::MatrixXd out(n, n);
    Eigen::VectorXd sigma(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        sigma(r) = cm(rest[r], measured);
        for (Eigen::Index c = 0; c < n; ++c) out(r, c) = cm(rest[r], rest[c]);
    }
    // Pseudo-inverse of diag(var, 0) keeps only the measured quadrature.
    out -= sigma * sigma.transpose() / var;
    return CovarianceMatrix(0.5 * (out + out.transpose()));
}

CovarianceMatrix condition_on_heterodyne(const CovarianceMatrix& cm, int mode) {
    check_mode(cm, mode, "heterodyne");
    CovarianceMatrix extended = direct_sum(cm, CovarianceMatrix::vacuum(1));
    const int ancilla = extended.modes() - 1;
    extended = apply_beamsplitter(extended, ancilla, mode, 0.5);
    return condition_on_homodyne(extended, mode, Quadrature::X);
}

}  // namespace cvqkd
