#include "mmslam/geometry.hpp"

#include "mmslam/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mmslam {

double wrap_angle(double a)
{
    if (!std::isfinite(a)) {
        throw std::domain_error("wrap_angle: non-finite input");
    }
    double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
    if (r <= -kPi) {
        r += 2.0 * kPi;
    }
    return r;
}

Eigen::VectorXd JointState::to_vector() const
{
    Eigen::VectorXd v(dim());
    v << ue.position, ue.heading, ue.bias, Eigen::VectorXd::Zero(dim() - kUeDim);
    for (std::size_t k = 0; k < landmarks.size(); ++k) {
        v.segment<2>(kUeDim + 2 * static_cast<int>(k)) = landmarks[k].position;
    }
    return v;
}

JointState JointState::from_vector(const Eigen::VectorXd& v)
{
    if (v.size() < kUeDim || (v.size() - kUeDim) % 2 != 0) {
        throw std::invalid_argument("JointState::from_vector: bad dimension " + std::to_string(v.size()));
    }
    JointState x;
    x.ue.position = v.head<2>();
    x.ue.heading = v(2);
    x.ue.bias = v(3);
    const auto n = static_cast<std::size_t>((v.size() - kUeDim) / 2);
    x.landmarks.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        x.landmarks[k].position = v.segment<2>(kUeDim + 2 * static_cast<int>(k));
    }
    return x;
}

namespace {

struct PathLegs {
    Eigen::Vector2d delta1;  // p_BS - p_UE (LoS) or p_BS - m (NLoS)
    Eigen::Vector2d delta2;  // p_BS - p_UE (LoS) or m - p_UE (NLoS)
    double d = 0.0;
};

const Landmark& landmark_for(const JointState& x, PathKind kind)
{
    if (*kind.landmark >= x.landmarks.size()) {
        throw std::out_of_range("path kind addresses landmark " + std::to_string(*kind.landmark) +
                                " but state has " + std::to_string(x.landmarks.size()));
    }
    return x.landmarks[*kind.landmark];
}

PathLegs legs(const Pose2& bs, const JointState& x, PathKind kind)
{
    PathLegs l;
    if (kind.is_los()) {
        l.delta1 = bs.position - x.ue.position;
        l.delta2 = l.delta1;
        l.d = l.delta1.norm();
        if (l.d < kMinDistance) {
            throw DegenerateGeometryError("UE coincides with BS");
        }
        return l;
    }
    const Eigen::Vector2d& m = landmark_for(x, kind).position;
    l.delta1 = bs.position - m;
    l.delta2 = m - x.ue.position;
    const double n1 = l.delta1.norm();
    const double n2 = l.delta2.norm();
    if (n1 < kMinDistance) {
        throw DegenerateGeometryError("landmark " + std::to_string(*kind.landmark) + " coincides with BS");
    }
    if (n2 < kMinDistance) {
        throw DegenerateGeometryError("landmark " + std::to_string(*kind.landmark) + " coincides with UE");
    }
    l.d = n1 + n2;
    return l;
}

// d/dv atan2(v_y, v_x)
Eigen::RowVector2d atan2_gradient(const Eigen::Vector2d& v)
{
    return Eigen::RowVector2d(-v.y(), v.x()) / v.squaredNorm();
}

struct LegJacobians {
    Eigen::Matrix<double, 3, 4> ue;
    Eigen::Matrix<double, 3, 2> landmark;
};

LegJacobians leg_jacobians(const Pose2& bs, const JointState& x, PathKind kind)
{
    const PathLegs l = legs(bs, x, kind);
    LegJacobians j;
    j.ue.setZero();
    j.landmark.setZero();

    if (kind.is_los()) {
        // v = p_UE - p_BS drives the AoD; delta = p_BS - p_UE drives the AoA.
        const Eigen::Vector2d v = -l.delta1;
        j.ue.block<1, 2>(0, 0) = (v / l.d).transpose();
        j.ue.block<1, 2>(1, 0) = atan2_gradient(v);
        j.ue.block<1, 2>(2, 0) = -atan2_gradient(l.delta2);
    } else {
        const Eigen::Vector2d v1 = -l.delta1;  // m - p_BS
        const double n1 = v1.norm();
        const double n2 = l.delta2.norm();
        j.ue.block<1, 2>(0, 0) = -(l.delta2 / n2).transpose();
        j.landmark.row(0) = (v1 / n1 + l.delta2 / n2).transpose();
        j.landmark.row(1) = atan2_gradient(v1);
        const Eigen::RowVector2d g2 = atan2_gradient(l.delta2);
        j.landmark.row(2) = g2;
        j.ue.block<1, 2>(2, 0) = -g2;
    }
    j.ue(0, 3) = -1.0;  // range row: d - B
    j.ue(2, 2) = -1.0;  // aoa row: ... - heading
    return j;
}

} // namespace

Eigen::Vector3d predict_measurement(const Pose2& bs, const JointState& x, PathKind kind)
{
    const PathLegs l = legs(bs, x, kind);
    return {l.d - x.ue.bias,
            wrap_angle(std::atan2(-l.delta1.y(), -l.delta1.x()) - bs.heading),
            wrap_angle(std::atan2(l.delta2.y(), l.delta2.x()) - x.ue.heading)};
}

Eigen::MatrixXd jacobian_measurement(const Pose2& bs, const JointState& x, PathKind kind)
{
    const LegJacobians j = leg_jacobians(bs, x, kind);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, x.dim());
    h.leftCols<kUeDim>() = j.ue;
    if (!kind.is_los()) {
        h.block<3, 2>(0, kUeDim + 2 * static_cast<int>(*kind.landmark)) = j.landmark;
    }
    return h;
}

Eigen::Matrix<double, 3, 4> jacobian_wrt_ue(const Pose2& bs, const JointState& x, PathKind kind)
{
    return leg_jacobians(bs, x, kind).ue;
}

Eigen::Vector3d measurement_residual(const Eigen::Vector3d& z, const Eigen::Vector3d& h)
{
    return {z(0) - h(0), wrap_angle(z(1) - h(1)), wrap_angle(z(2) - h(2))};
}

} // namespace mmslam
