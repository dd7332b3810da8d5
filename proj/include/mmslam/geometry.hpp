#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace mmslam {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

/// Distances below this are treated as coincident points.
constexpr double kMinDistance = 1e-9;

/// Dimension of the UE block [x, y, heading, bias] in the joint state.
constexpr int kUeDim = 4;

/// Wraps an angle to (-pi, pi]. Throws std::domain_error for non-finite input.
double wrap_angle(double a);

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Pose2 {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double heading = 0.0;
};

/// UE position, heading and clock bias expressed in meters (c * b_UE).
struct UEState {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double heading = 0.0;
    double bias = 0.0;
};

struct Landmark {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

/// UE state stacked with the landmark map. Vector layout is
/// [x_UE, y_UE, heading_UE, bias_UE, x_2, y_2, ..., x_N, y_N].
struct JointState {
    UEState ue;
    std::vector<Landmark> landmarks;

    int dim() const { return kUeDim + 2 * static_cast<int>(landmarks.size()); }
    Eigen::VectorXd to_vector() const;
    static JointState from_vector(const Eigen::VectorXd& v);
};

/// One channel-parameter measurement z_n = [range, aod, aoa] with its noise
/// covariance. `power` is the linear path power reported by the angle
/// estimator; it only drives the LoS-candidate rule.
struct Measurement {
    double range = 0.0;
    double aod = 0.0;
    double aoa = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
    double power = 1.0;

    Eigen::Vector3d vector() const { return {range, aod, aoa}; }
};

/// Either the direct path or a single bounce off landmark `landmark`.
struct PathKind {
    std::optional<std::size_t> landmark;

    static PathKind los() { return {}; }
    static PathKind nlos(std::size_t index) { return {index}; }
    bool is_los() const { return !landmark.has_value(); }
};

/// Mean of the bistatic measurement [d - B, aod, aoa] for the given path.
Eigen::Vector3d predict_measurement(const Pose2& bs, const JointState& x, PathKind kind);

/// 3 x dim(x) Jacobian of predict_measurement with respect to the stacked state.
Eigen::MatrixXd jacobian_measurement(const Pose2& bs, const JointState& x, PathKind kind);

/// 3 x 4 Jacobian with respect to the UE block only.
Eigen::Matrix<double, 3, 4> jacobian_wrt_ue(const Pose2& bs, const JointState& x, PathKind kind);

/// Residual z - h with angle components wrapped to (-pi, pi].
Eigen::Vector3d measurement_residual(const Eigen::Vector3d& z, const Eigen::Vector3d& h);

} // namespace mmslam
