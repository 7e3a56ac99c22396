#include <doctest.h>

#include "qsdlab/error.hpp"
#include "qsdlab/model_io.hpp"
#include "random_chain.hpp"

#include <filesystem>
#include <fstream>

using namespace qsd;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("validate_chain accepts a symmetric killed chain") {
    const AbsorbedChain c = validate_chain(mat({{-2, 1}, {1, -2}}));
    CHECK(c.size() == 2);
    CHECK(c.killing()(0) == 1.0);
    CHECK(c.killing()(1) == 1.0);
    CHECK(c.states() == std::vector<std::string>{"1", "2"});
}

TEST_CASE("validate_chain rejects each invariant violation") {
    CHECK(kind_of([] { validate_chain(mat({{-1, 1}, {1, -1}})); }) == ErrorKind::NoKilling);
    CHECK(kind_of([] { validate_chain(mat({{-2, 0}, {1, -2}})); }) == ErrorKind::Reducible);
    CHECK(kind_of([] { validate_chain(mat({{-2, -1}, {1, -2}})); }) == ErrorKind::NegativeOffDiagonal);
    CHECK(kind_of([] { validate_chain(mat({{-1, 2}, {1, -2}})); }) == ErrorKind::PositiveRowSum);
    CHECK(kind_of([] { validate_chain(Matrix(2, 3)); }) == ErrorKind::ValidationError);
    Matrix nan = mat({{-2, 1}, {1, -2}});
    nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK(kind_of([&] { validate_chain(nan); }) == ErrorKind::ValidationError);
}

TEST_CASE("reducibility diagnostic names the unreachable state") {
    try {
        validate_chain(mat({{-2, 0}, {1, -2}}));
        FAIL("expected Reducible");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
}

TEST_CASE("build_birth_death examples") {
    const AbsorbedChain one = build_birth_death(1, {0}, {1});
    CHECK(one.generator()(0, 0) == -1.0);

    const AbsorbedChain two = build_birth_death(2, {1, 0}, {1, 1});
    CHECK(two.generator() == mat({{-2, 1}, {1, -1}}));

    // Hand-assembled tridiagonal matrix for BD5.
    Matrix expected = Matrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
        if (i < 4) expected(i, i + 1) = 1.0;
        if (i > 0) expected(i, i - 1) = 1.0;
        expected(i, i) = -(i < 4 ? 2.0 : 1.0);
    }
    CHECK(fixtures::bd5().generator() == expected);
    CHECK(validate_chain(expected).generator() == expected);
}

TEST_CASE("build_birth_death rejects invalid rates") {
    CHECK(kind_of([] { build_birth_death(2, {1, 0}, {0, 1}); }) == ErrorKind::InvalidRates);
    CHECK(kind_of([] { build_birth_death(2, {1, 1}, {1, 1}); }) == ErrorKind::InvalidRates);
    CHECK(kind_of([] { build_birth_death(2, {-1, 0}, {1, 1}); }) == ErrorKind::InvalidRates);
    CHECK(kind_of([] { build_birth_death(2, {1}, {1, 1}); }) == ErrorKind::InvalidRates);
}

TEST_CASE("birth-death chains always validate") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial % 9;
        std::vector<double> b(n), d(n);
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = i + 1 < n ? 0.1 + u(rng) : 0.0;
            d[i] = 0.1 + u(rng);
        }
        CHECK_NOTHROW(build_birth_death(n, b, d));
    }
}

TEST_CASE("semigroups of constructed chains are sub-stochastic") {
    auto chains = testing::random_chain_set(10, 11);
    chains.push_back(fixtures::m2sym());
    chains.push_back(fixtures::bd5());
    for (const auto& c : chains) {
        for (double t : {0.1, 1.0, 10.0}) {
            const Matrix P = expm(t * c.generator());
            CHECK(P.minCoeff() >= -1e-14);
            CHECK(P.rowwise().sum().maxCoeff() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("weights and initial laws") {
    CHECK_THROWS_AS(make_weight(Vector::Constant(2, 0.5)), Error);
    CHECK_NOTHROW(make_weight(Vector::Constant(2, 1.0)));
    Vector bad(2);
    bad << 0.7, 0.7;
    CHECK_THROWS_AS(make_initial_law(bad), Error);
    bad << -0.5, 1.5;
    CHECK_THROWS_AS(make_initial_law(bad), Error);
    const InitialLaw u = InitialLaw::uniform(4);
    CHECK(u.mu.sum() == doctest::Approx(1.0));
    CHECK(InitialLaw::point_mass(3, 2).mu(2) == 1.0);
}

TEST_CASE("minimal model file gets defaults") {
    const ModelBundle b = parse_model_config(R"({"generator": [[-2, 1], [1, -2]]})");
    CHECK(b.chain.generator() == mat({{-2, 1}, {1, -2}}));
    CHECK(b.weight.psi1 == Vector::Ones(2));
    CHECK(b.initial.mu == Vector::Constant(2, 0.5));
    CHECK(b.observable(0) == 1.0);
    CHECK(b.observable(1) == 0.0);
}

TEST_CASE("birth_death block builds the same matrix as the builder") {
    const ModelBundle b = parse_model_config(
        R"({"birth_death": {"n": 5, "birth": [1, 1, 1, 1, 0], "death": [1, 1, 1, 1, 1]}})");
    const Matrix expected = build_birth_death(5, {1, 1, 1, 1, 0}, {1, 1, 1, 1, 1}).generator();
    REQUIRE(b.chain.generator().size() == expected.size());
    CHECK(std::memcmp(b.chain.generator().data(), expected.data(), sizeof(double) * expected.size()) == 0);
}

TEST_CASE("model file errors") {
    auto kind = [](const std::string& text) { return kind_of([&] { parse_model_config(text); }); };
    CHECK(kind(R"({"generator": [[-2, 1], [1, -2]], "mu": [0.7, 0.7]})") == ErrorKind::ValidationError);
    CHECK(kind(R"({"generator": [[-1, 1], [1, -1]]})") == ErrorKind::ValidationError);
    CHECK(kind(R"({"generator": [[-2, 1], [1, -2]], "extra": 1})") == ErrorKind::ParseError);
    CHECK(kind(R"({"generator": [[-2, 1], [1, -2]],)") == ErrorKind::ParseError);
    CHECK(kind(R"({})") == ErrorKind::ParseError);
    CHECK(kind(R"({"generator": [[-2, 1], [1, -2]], "psi1": [1]})") == ErrorKind::ParseError);
    CHECK(kind(R"({"generator": [[-2, 1], [1, -2]], "observable": [2, 0]})") == ErrorKind::ValidationError);

    try {
        parse_model_config("{\n  \"generator\": [[-2, 1],\n  [1, -2]\n");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    try {
        parse_model_config(R"({"generator": [[-2, 1], [1, "x"]]})");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("generator") != std::string::npos);
    }
}

TEST_CASE("emit then parse is the identity") {
    auto check_round_trip = [](const ModelBundle& b) {
        const ModelBundle back = parse_model_config(emit_model_config(b));
        CHECK(back.chain.generator() == b.chain.generator());
        CHECK(back.chain.states() == b.chain.states());
        CHECK(back.weight.psi1 == b.weight.psi1);
        CHECK(back.initial.mu == b.initial.mu);
        CHECK(back.observable == b.observable);
    };
    for (const char* name : {"m2sym", "m2asym", "bd5"}) check_round_trip(*fixtures::bundle(name));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& chain : testing::random_chain_set(5, 17)) {
        const auto n = static_cast<Eigen::Index>(chain.size());
        Vector psi1(n), mu(n), f(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            psi1(i) = 1.0 + 3.0 * u(rng);
            mu(i) = u(rng);
            f(i) = 2.0 * u(rng) - 1.0;
        }
        mu /= mu.sum();
        check_round_trip(ModelBundle{chain, make_weight(psi1), make_initial_law(mu), f});
    }
}

TEST_CASE("resolve_model reads fixtures and files") {
    CHECK(resolve_model("bd5").chain.size() == 5);
    const auto path = std::filesystem::temp_directory_path() / "qsdlab_model_test.json";
    {
        std::ofstream out(path);
        out << emit_model_config(*fixtures::bundle("m2asym"));
    }
    CHECK(resolve_model(path.string()).chain.generator() == fixtures::m2asym().generator());
    std::filesystem::remove(path);
    CHECK(kind_of([] { resolve_model("/nonexistent/model.json"); }) == ErrorKind::ParseError);
}
