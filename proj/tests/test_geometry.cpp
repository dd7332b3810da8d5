#include "mmslam/errors.hpp"
#include "mmslam/geometry.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace mmslam;
using Catch::Approx;

namespace {

JointState ue_at(double x, double y, double heading, double bias)
{
    JointState s;
    s.ue.position = {x, y};
    s.ue.heading = heading;
    s.ue.bias = bias;
    return s;
}

Eigen::MatrixXd fd_jacobian(const Pose2& bs, const JointState& x, PathKind kind, double h = 1e-6)
{
    const Eigen::VectorXd v = x.to_vector();
    Eigen::MatrixXd j(3, v.size());
    for (int c = 0; c < v.size(); ++c) {
        Eigen::VectorXd vp = v;
        Eigen::VectorXd vm = v;
        vp(c) += h;
        vm(c) -= h;
        j.col(c) = measurement_residual(predict_measurement(bs, JointState::from_vector(vp), kind),
                                        predict_measurement(bs, JointState::from_vector(vm), kind)) /
                   (2.0 * h);
    }
    return j;
}

} // namespace

TEST_CASE("wrap_angle maps onto (-pi, pi]", "[geometry]")
{
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(3.0 * kPi) == Approx(kPi));
    CHECK(wrap_angle(-kPi) == Approx(kPi));
    CHECK(wrap_angle(kPi) == Approx(kPi));
    CHECK(wrap_angle(-3.0 * kPi / 2.0) == Approx(kPi / 2.0));
    CHECK_THROWS_AS(wrap_angle(std::nan("")), std::domain_error);
    CHECK_THROWS_AS(wrap_angle(INFINITY), std::domain_error);
}

TEST_CASE("wrap_angle stays in range for many inputs", "[geometry]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int k = 0; k < 1000; ++k) {
        const double a = u(rng);
        const double w = wrap_angle(a);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        const double turns = (a - w) / (2.0 * kPi);
        CHECK(turns == Approx(std::round(turns)).margin(1e-9));
    }
}

TEST_CASE("3-4-5 LoS measurement", "[geometry]")
{
    const Pose2 bs;
    const Eigen::Vector3d h = predict_measurement(bs, ue_at(3.0, 4.0, 0.0, 0.0), PathKind::los());
    CHECK(h(0) == Approx(5.0));
    CHECK(h(1) == Approx(0.9273).margin(1e-4));
    CHECK(h(2) == Approx(-2.2143).margin(1e-4));
}

TEST_CASE("axis-aligned single bounce", "[geometry]")
{
    const Pose2 bs;
    JointState x = ue_at(5.0, 5.0, 0.0, 0.0);
    x.landmarks.push_back({Eigen::Vector2d(0.0, 5.0)});
    const Eigen::Vector3d h = predict_measurement(bs, x, PathKind::nlos(0));
    CHECK(h(0) == Approx(10.0));
    CHECK(h(1) == Approx(kPi / 2.0));
    CHECK(h(2) == Approx(kPi));
}

TEST_CASE("bias only shifts the range row", "[geometry]")
{
    const Pose2 bs{Eigen::Vector2d(1.0, -2.0), 0.4};
    JointState a = ue_at(4.0, 3.0, 1.1, 0.0);
    a.landmarks.push_back({Eigen::Vector2d(-2.0, 6.0)});
    JointState b = a;
    b.ue.bias = 2.0;
    for (const PathKind kind : {PathKind::los(), PathKind::nlos(0)}) {
        const Eigen::Vector3d ha = predict_measurement(bs, a, kind);
        const Eigen::Vector3d hb = predict_measurement(bs, b, kind);
        CHECK(hb(0) - ha(0) == Approx(-2.0));
        CHECK(hb(1) == ha(1));
        CHECK(hb(2) == ha(2));
    }
}

TEST_CASE("BS and UE headings enter the angles", "[geometry]")
{
    const Pose2 bs{Eigen::Vector2d::Zero(), 0.3};
    const Eigen::Vector3d h0 = predict_measurement(Pose2{}, ue_at(3.0, 4.0, 0.0, 0.0), PathKind::los());
    const Eigen::Vector3d h1 = predict_measurement(bs, ue_at(3.0, 4.0, 0.5, 0.0), PathKind::los());
    CHECK(h1(1) == Approx(wrap_angle(h0(1) - 0.3)));
    CHECK(h1(2) == Approx(wrap_angle(h0(2) - 0.5)));
}

TEST_CASE("Jacobian structure", "[geometry]")
{
    const Pose2 bs{Eigen::Vector2d(0.5, 0.5), 0.2};
    JointState x = ue_at(4.0, -3.0, 0.7, 1.5);
    x.landmarks.push_back({Eigen::Vector2d(6.0, 4.0)});
    x.landmarks.push_back({Eigen::Vector2d(-3.0, 2.0)});
    for (const PathKind kind : {PathKind::los(), PathKind::nlos(0), PathKind::nlos(1)}) {
        const Eigen::MatrixXd j = jacobian_measurement(bs, x, kind);
        REQUIRE(j.rows() == 3);
        REQUIRE(j.cols() == x.dim());
        CHECK(j(0, 3) == -1.0);
        CHECK(j(2, 2) == -1.0);
        CHECK(j(1, 2) == 0.0);
        CHECK(j(1, 3) == 0.0);
        CHECK(j(2, 3) == 0.0);
    }
    // Landmarks not on the path contribute nothing.
    const Eigen::MatrixXd j0 = jacobian_measurement(bs, x, PathKind::nlos(0));
    CHECK(j0.rightCols(2).isZero());
    const Eigen::MatrixXd jl = jacobian_measurement(bs, x, PathKind::los());
    CHECK(jl.rightCols(4).isZero());
    // LoS AoD depends on the UE position only through geometry, not heading.
    CHECK(jl(1, 2) == 0.0);
}

TEST_CASE("Jacobian matches central differences on random states", "[geometry]")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-10.0, 10.0);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    int checked = 0;
    while (checked < 200) {
        const Pose2 bs{Eigen::Vector2d(pos(rng), pos(rng)), ang(rng)};
        JointState x = ue_at(pos(rng), pos(rng), ang(rng), pos(rng));
        x.landmarks.push_back({Eigen::Vector2d(pos(rng), pos(rng))});
        const double d1 = (bs.position - x.ue.position).norm();
        const double d2 = (bs.position - x.landmarks[0].position).norm();
        const double d3 = (x.ue.position - x.landmarks[0].position).norm();
        if (std::min({d1, d2, d3}) < 1.0) {
            continue;
        }
        ++checked;
        for (const PathKind kind : {PathKind::los(), PathKind::nlos(0)}) {
            const Eigen::MatrixXd a = jacobian_measurement(bs, x, kind);
            const Eigen::MatrixXd f = fd_jacobian(bs, x, kind);
            CHECK((a - f).norm() / a.norm() < 1e-5);
            CHECK((jacobian_wrt_ue(bs, x, kind) - a.leftCols(4)).norm() == 0.0);
        }
    }
}

TEST_CASE("coincident points raise degenerate geometry", "[geometry]")
{
    const Pose2 bs;
    CHECK_THROWS_AS(predict_measurement(bs, ue_at(0.0, 0.0, 0.0, 0.0), PathKind::los()), DegenerateGeometryError);
    JointState x = ue_at(3.0, 4.0, 0.0, 0.0);
    x.landmarks.push_back({Eigen::Vector2d(0.0, 0.0)});
    CHECK_THROWS_AS(predict_measurement(bs, x, PathKind::nlos(0)), DegenerateGeometryError);
    x.landmarks[0].position = {3.0, 4.0};
    CHECK_THROWS_AS(jacobian_measurement(bs, x, PathKind::nlos(0)), DegenerateGeometryError);
}

TEST_CASE("residual wraps angle components", "[geometry]")
{
    const Eigen::Vector3d z(5.0, kPi - 0.01, -kPi + 0.02);
    const Eigen::Vector3d h(4.0, -kPi + 0.01, kPi - 0.02);
    const Eigen::Vector3d r = measurement_residual(z, h);
    CHECK(r(0) == Approx(1.0));
    CHECK(r(1) == Approx(-0.02));
    CHECK(r(2) == Approx(0.04));
}

TEST_CASE("joint state vector round trip", "[geometry]")
{
    JointState x = ue_at(1.0, 2.0, 0.3, -4.0);
    x.landmarks.push_back({Eigen::Vector2d(5.0, 6.0)});
    x.landmarks.push_back({Eigen::Vector2d(7.0, 8.0)});
    const Eigen::VectorXd v = x.to_vector();
    REQUIRE(v.size() == 8);
    CHECK(v(3) == -4.0);
    CHECK(v(6) == 7.0);
    const JointState y = JointState::from_vector(v);
    CHECK(y.to_vector() == v);
    CHECK_THROWS(JointState::from_vector(Eigen::VectorXd::Zero(5)));
}
