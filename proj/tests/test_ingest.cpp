#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "conservnet/ingest.hpp"
#include "dp_fixture.hpp"

using namespace conservnet;

namespace {
std::filesystem::path tmp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("818-row file splits 654/164 with the 0.1 omega scaling") {
    const auto path = tmp_file("cn_dp_818.csv");
    dp_fixture::write_csv(path.string());

    auto [train, test] = load_double_pendulum(path.string());
    CHECK(train.groups.size() == 1);
    CHECK(test.groups.size() == 1);
    CHECK(train.groups[0].states.rows() == 654);
    CHECK(test.groups[0].states.rows() == 164);
    CHECK(train.dim == 4);
    CHECK_FALSE(train.has_truth());
    CHECK(train.rescale_log[2] == 0.1);
    CHECK(train.rescale_log[3] == 0.1);

    // order preserved: train || test equals the original row sequence
    const auto rows = dp_fixture::simulate(818);
    for (int j = 0; j < 654; ++j) {
        CHECK(train.groups[0].states(j, 0) == rows[j][0]);
        CHECK(train.groups[0].states(j, 2) == 0.1 * rows[j][2]);
    }
    for (int j = 0; j < 164; ++j) {
        CHECK(test.groups[0].states(j, 1) == rows[654 + j][1]);
        CHECK(test.groups[0].states(j, 3) == 0.1 * rows[654 + j][3]);
    }

    // reload determinism
    auto [train2, test2] = load_double_pendulum(path.string());
    CHECK((train.groups[0].states - train2.groups[0].states).cwiseAbs().maxCoeff() == 0.0);
    CHECK((test.groups[0].states - test2.groups[0].states).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("headerless files and trailing whitespace are tolerated") {
    const auto path = tmp_file("cn_dp_nohdr.csv");
    {
        std::ofstream out(path);
        out << "0.1,0.2,0.3,0.4 \n";
        out << "0.2,0.3,0.4,0.5\r\n";
        out << "0.3,0.4,0.5,0.6\n";
        out << "0.4,0.5,0.6,0.7\n";
        out << "0.5,0.6,0.7,0.8\n";
    }
    auto [train, test] = load_double_pendulum(path.string());
    CHECK(train.groups[0].states.rows() + test.groups[0].states.rows() == 5);
    CHECK(train.groups[0].states(0, 0) == 0.1);
    std::filesystem::remove(path);
}

TEST_CASE("malformed rows fail with a line number") {
    const auto path = tmp_file("cn_dp_bad.csv");
    {
        std::ofstream out(path);
        out << "0.1,0.2,0.3,0.4\n";
        out << "0.2,oops,0.4,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_double_pendulum(path.string()),
                         doctest::Contains(":2:"), std::runtime_error);
    {
        std::ofstream out(path);
        out << "0.1,0.2,0.3\n0.1,0.2,0.3\n";  // wrong column count
    }
    CHECK_THROWS_AS(load_double_pendulum(path.string()), std::runtime_error);
    {
        std::ofstream out(path);
        out << "0.1,0.2,0.3,nan\n0.1,0.2,0.3,0.4\n";  // NaN poisons variances
    }
    CHECK_THROWS_AS(load_double_pendulum(path.string()), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("ideal cross-sections") {
    const Eigen::VectorXd ax = Eigen::VectorXd::LinSpaced(5, -2, 2);
    const Eigen::MatrixXd zero =
        ideal_dp_crosssection(DpCrossSection::OmegaPlane, ax, ax, Eigen::Vector4d::Zero());
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.rows() == 5);
    CHECK(zero.cols() == 5);

    // (1,0,0,0) at omega1 = 2: value 4
    Eigen::VectorXd at2(1);
    at2 << 2.0;
    Eigen::VectorXd at0(1);
    at0 << 0.0;
    const Eigen::MatrixXd q = ideal_dp_crosssection(DpCrossSection::OmegaPlane, at2, at0,
                                                    Eigen::Vector4d(1, 0, 0, 0));
    CHECK(q(0, 0) == doctest::Approx(4.0));

    // theta plane symmetric under joint sign flip (cosine evenness)
    const Eigen::VectorXd th = Eigen::VectorXd::LinSpaced(7, -3, 3);
    const Eigen::MatrixXd t = ideal_dp_crosssection(DpCrossSection::ThetaPlane, th, th,
                                                    Eigen::Vector4d(41, -124.13, -46.82, 57));
    for (Eigen::Index i = 0; i < th.size(); ++i)
        for (Eigen::Index j = 0; j < th.size(); ++j)
            CHECK(t(i, j) ==
                  doctest::Approx(t(th.size() - 1 - i, th.size() - 1 - j)).epsilon(1e-12));
}
