#pragma once

#include <Eigen/Dense>

namespace microtwin::sim {

/// Constant-coefficient linear system  dx/dt = A x + B u,
/// integrated with fixed-step RK4. `dt` is the integration sub-step.
class LinearStateSpace {
public:
    LinearStateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::VectorXd x0, double dt = 1.0);

    Eigen::Index states() const noexcept { return a_.rows(); }
    Eigen::Index inputs() const noexcept { return b_.cols(); }

    const Eigen::MatrixXd& a() const noexcept { return a_; }
    const Eigen::MatrixXd& b() const noexcept { return b_; }
    const Eigen::VectorXd& state() const noexcept { return x_; }
    double dt() const noexcept { return dt_; }

    void set_state(const Eigen::VectorXd& x);

    // Holds u constant over `duration` seconds. Sub-steps are equal and no
    // longer than dt. The new state is stored and returned.
    const Eigen::VectorXd& step(const Eigen::VectorXd& u, double duration);

    // x* with A x* + B u = 0. Throws when A is singular.
    Eigen::VectorXd steady_state(const Eigen::VectorXd& u) const;

private:
    Eigen::VectorXd derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& bu) const;
    void check_input(const Eigen::VectorXd& u) const;

    Eigen::MatrixXd a_;
    Eigen::MatrixXd b_;
    Eigen::VectorXd x_;
    double dt_;
};

}  // namespace microtwin::sim
