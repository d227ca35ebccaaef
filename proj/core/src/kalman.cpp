#include <cmath>

#include "picard/error.hpp"
#include "picard/oracles.hpp"

namespace picard
{
namespace
{

Eigen::MatrixXd to_eigen(const Matrix& m)
{
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
    return out;
}

} // namespace

KalmanState kalman_bucy(const FilteringModel& model, const NoiseTable& y_increments)
{
    if (!model.linear_gaussian || !model.linear)
        throw ValidationError("kalman_bucy requires a linear-Gaussian model");
    model.validate();
    if (y_increments.dim() != model.obs_dim)
        throw ValidationError("observation increments do not match the model's observation dimension");

    const Eigen::MatrixXd a = to_eigen(model.linear->drift);
    const Eigen::MatrixXd s = to_eigen(model.linear->diffusion);
    const Eigen::MatrixXd h = to_eigen(model.linear->observation);
    const Eigen::MatrixXd q = s * s.transpose();
    const Eigen::MatrixXd hth = h.transpose() * h;
    const auto n = static_cast<Eigen::Index>(model.state_dim);
    const auto d = static_cast<Eigen::Index>(model.obs_dim);
    const double dt = y_increments.grid().dt();

    KalmanState state{y_increments.grid(), {}, {}};
    state.mean.reserve(y_increments.steps() + 1);
    state.covariance.reserve(y_increments.steps() + 1);

    Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(model.initial_state.data(), n);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    state.mean.push_back(m);
    state.covariance.push_back(p);

    for (std::size_t i = 0; i < y_increments.steps(); ++i)
    {
        const auto row = y_increments.row(i);
        const Eigen::VectorXd dy = Eigen::Map<const Eigen::VectorXd>(row.data(), d);
        const Eigen::VectorXd innovation = dy - h * m * dt;
        const Eigen::VectorXd m_next = m + a * m * dt + p * h.transpose() * innovation;
        Eigen::MatrixXd p_next = p + (a * p + p * a.transpose() + q - p * hth * p) * dt;
        p = 0.5 * (p_next + p_next.transpose());
        m = m_next;
        if (!m.allFinite() || !p.allFinite())
            throw IntegrationError(i, "non-finite Kalman-Bucy state");
        state.mean.push_back(m);
        state.covariance.push_back(p);
    }
    return state;
}

} // namespace picard
