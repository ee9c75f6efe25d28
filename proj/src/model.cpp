#include "wecmpc/model.hpp"

#include "wecmpc/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace wecmpc {

void ContinuousPlant::validate() const {
    const Index n = A.rows();
    if (n == 0 || A.cols() != n) {
        throw InvalidModelError("plant: A must be square and non-empty");
    }
    if (B.size() != n || Cp.size() != n || Cv.size() != n) {
        throw InvalidModelError("plant: B, Cp, Cv must have " + std::to_string(n) + " entries");
    }
    if (!A.allFinite() || !B.allFinite() || !Cp.allFinite() || !Cv.allFinite()) {
        throw InvalidModelError("plant: non-finite matrix entries");
    }
}

DiscretePlant zoh_discretize(const ContinuousPlant& plant, double T) {
    plant.validate();
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw InvalidParameterError("zoh_discretize: period must be positive and finite");
    }
    const Index n = plant.states();
    Matrix aug = Matrix::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = plant.A * T;
    aug.topRightCorner(n, 1) = plant.B * T;
    const Matrix e = aug.exp();

    DiscretePlant out;
    out.A = e.topLeftCorner(n, n);
    out.B = e.topRightCorner(n, 1);
    out.Cp = plant.Cp;
    out.Cv = plant.Cv;
    out.T = T;
    return out;
}

ContinuousPlant make_benchmark_plant(double mass, double stiffness, double damping,
                                     std::optional<RadiationLag> radiation) {
    if (!(mass > 0.0) || !(stiffness > 0.0) || !(damping > 0.0)) {
        throw InvalidParameterError("benchmark plant: mass, stiffness and damping must be > 0");
    }
    if (radiation && (!(radiation->pole < 0.0) || !(radiation->gain >= 0.0))) {
        throw InvalidParameterError("benchmark plant: radiation pole must be < 0 and gain >= 0");
    }

    ContinuousPlant p;
    const Index n = radiation ? 4 : 2;
    p.A = Matrix::Zero(n, n);
    p.B = Vector::Zero(n);
    p.Cp = RowVector::Zero(n);
    p.Cv = RowVector::Zero(n);

    p.A(0, 1) = 1.0;
    p.A(1, 0) = -stiffness / mass;
    p.A(1, 1) = -damping / mass;
    p.B(1) = 1.0 / mass;
    p.Cp(0) = 1.0;
    p.Cv(1) = 1.0;

    if (radiation) {
        // r1' = v - a r1, r2' = r1 - a r2, so r2 = v / (s + a)^2 and the
        // radiation force is gain * a * (r1 - a r2).
        const double a = -radiation->pole;
        const double ga = radiation->gain * a;
        p.A(1, 2) = -ga / mass;
        p.A(1, 3) = ga * a / mass;
        p.A(2, 1) = 1.0;
        p.A(2, 2) = -a;
        p.A(3, 2) = 1.0;
        p.A(3, 3) = -a;
    }
    return p;
}

double spectral_abscissa(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

bool is_internally_stable(const ContinuousPlant& plant) {
    plant.validate();
    return spectral_abscissa(plant.A) < 0.0;
}

std::vector<double> velocity_response_real_part(const ContinuousPlant& plant,
                                                const std::vector<double>& omegas) {
    plant.validate();
    using Complex = std::complex<double>;
    const Index n = plant.states();
    const Eigen::MatrixXcd a = plant.A.cast<Complex>();
    const Eigen::VectorXcd b = plant.B.cast<Complex>();
    const Eigen::RowVectorXcd cv = plant.Cv.cast<Complex>();

    std::vector<double> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        Eigen::MatrixXcd m = Complex(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - a;
        const Eigen::VectorXcd x = m.partialPivLu().solve(b);
        out.push_back((cv * x)(0).real());
    }
    return out;
}

double passivity_margin(const ContinuousPlant& plant, const std::vector<double>& omegas) {
    double worst = std::numeric_limits<double>::infinity();
    for (double re : velocity_response_real_part(plant, omegas)) {
        worst = std::min(worst, re);
    }
    return worst;
}

std::vector<double> log_frequency_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
        throw InvalidParameterError("log_frequency_grid: need 0 < lo < hi and count >= 2");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    }
    return out;
}

}  // namespace wecmpc
