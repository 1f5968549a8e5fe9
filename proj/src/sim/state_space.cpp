#include "microtwin/sim/state_space.hpp"

#include <cmath>
#include <string>

#include "microtwin/error.hpp"

namespace microtwin::sim {

namespace {

std::string dims(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

LinearStateSpace::LinearStateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::VectorXd x0, double dt)
    : a_(std::move(a)), b_(std::move(b)), x_(std::move(x0)), dt_(dt) {
    if (a_.rows() == 0 || a_.rows() != a_.cols()) {
        throw Error(ErrorKind::Config, "state matrix A must be square and non-empty, got " + dims(a_));
    }
    if (b_.rows() != a_.rows()) {
        throw Error(ErrorKind::Config,
                    "input matrix B has " + std::to_string(b_.rows()) + " rows, A is " + dims(a_));
    }
    if (x_.size() != a_.rows()) {
        throw Error(ErrorKind::Config, "initial state has length " + std::to_string(x_.size()) +
                                           ", A is " + dims(a_));
    }
    if (!(dt_ > 0.0)) {
        throw Error(ErrorKind::Config, "integration step must be positive");
    }
}

void LinearStateSpace::set_state(const Eigen::VectorXd& x) {
    if (x.size() != a_.rows()) {
        throw Error(ErrorKind::Config, "state length mismatch");
    }
    x_ = x;
}

void LinearStateSpace::check_input(const Eigen::VectorXd& u) const {
    if (u.size() != b_.cols()) {
        throw Error(ErrorKind::Config, "input vector has length " + std::to_string(u.size()) +
                                           ", B is " + dims(b_));
    }
}

Eigen::VectorXd LinearStateSpace::derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& bu) const {
    return a_ * x + bu;
}

const Eigen::VectorXd& LinearStateSpace::step(const Eigen::VectorXd& u, double duration) {
    check_input(u);
    if (!(duration > 0.0)) {
        throw Error(ErrorKind::Config, "step duration must be positive");
    }
    const auto substeps = static_cast<long>(std::ceil(duration / dt_ - 1e-12));
    const double h = duration / static_cast<double>(substeps);
    const Eigen::VectorXd bu = b_ * u;
    for (long i = 0; i < substeps; ++i) {
        Eigen::VectorXd k1 = derivative(x_, bu);
        Eigen::VectorXd k2 = derivative(x_ + 0.5 * h * k1, bu);
        Eigen::VectorXd k3 = derivative(x_ + 0.5 * h * k2, bu);
        Eigen::VectorXd k4 = derivative(x_ + h * k3, bu);
        x_ += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x_;
}

Eigen::VectorXd LinearStateSpace::steady_state(const Eigen::VectorXd& u) const {
    check_input(u);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::Config, "no unique steady state: A is singular");
    }
    return lu.solve(-(b_ * u));
}

}  // namespace microtwin::sim
