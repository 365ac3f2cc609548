#include "inhomo/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <random>

using namespace inhomo;

namespace {

json base_spec() {
    return json::parse(R"({
        "prior": {"kappa": 1,
                  "atoms": [[1.0], [-1.0], [0.0]],
                  "weights": [0.25, 0.25, 0.5]},
        "profile": {"rho": [0.4, 0.6],
                    "inv_delta": [[1.0, 0.5], [0.5, 1.0]]}
    })");
}

}  // namespace

TEST_CASE("model spec parsing") {
    SUBCASE("valid finite-prior spec") {
        ModelSpec m = parse_model_spec(base_spec());
        CHECK(m.prior.kappa == 1);
        CHECK(m.prior.atoms.size() == 3);
        CHECK(m.profile.n == 2);
        CHECK(!m.channel);
    }
    SUBCASE("gaussian prior flag") {
        json j = base_spec();
        j["prior"] = {{"kappa", 2}, {"gaussian", true}};
        ModelSpec m = parse_model_spec(j);
        CHECK(m.prior.gaussian);
        CHECK(m.prior.kappa == 2);
    }
    SUBCASE("dcsbm channel") {
        json j = base_spec();
        j["channel"] = {{"kind", "dcsbm"},
                        {"theta", {0.3, 0.7}},
                        {"lambda", 1.0}};
        ModelSpec m = parse_model_spec(j);
        REQUIRE(m.channel.has_value());
        CHECK(m.channel->kind == ChannelKind::dcsbm);
        CHECK(m.channel->lambda == 1.0);
    }
    SUBCASE("family shape") {
        json j = base_spec();
        j["family"] = {{"shape", {{1.0, 0.5}, {0.5, 1.0}}}};
        ModelSpec m = parse_model_spec(j);
        REQUIRE(m.family_shape.has_value());
        CHECK((*m.family_shape)(0, 1) == 0.5);
    }
}

TEST_CASE("strict parsing rejects unknown fields") {
    SUBCASE("root level") {
        json j = base_spec();
        j["extra"] = 1;
        CHECK_THROWS_AS(parse_model_spec(j), SpecError);
    }
    SUBCASE("inside prior") {
        json j = base_spec();
        j["prior"]["scale"] = 2.0;
        CHECK_THROWS_AS(parse_model_spec(j), SpecError);
    }
    SUBCASE("inside profile") {
        json j = base_spec();
        j["profile"]["delta"] = 1.0;
        CHECK_THROWS_AS(parse_model_spec(j), SpecError);
    }
    SUBCASE("inside channel") {
        json j = base_spec();
        j["channel"] = {{"kind", "dcsbm"},
                        {"theta", {0.3, 0.7}},
                        {"lambda", 1.0},
                        {"mu", 0.0}};
        CHECK_THROWS_AS(parse_model_spec(j), SpecError);
    }
    SUBCASE("structural errors") {
        json j = base_spec();
        j["prior"]["weights"] = {0.5, 0.5, 0.5};
        CHECK_THROWS_AS(parse_model_spec(j), SpecError);
        json k = base_spec();
        k.erase("profile");
        CHECK_THROWS_AS(parse_model_spec(k), SpecError);
    }
}

TEST_CASE("spec round trip") {
    json j = base_spec();
    j["channel"] = {{"kind", "dcsbm"}, {"theta", {0.3, 0.7}},
                    {"lambda", 1.0}};
    j["labels"] = {{"note", "round trip"}};
    ModelSpec m = parse_model_spec(j);
    ModelSpec m2 = parse_model_spec(to_json(m));
    CHECK(m2.prior.weights == m.prior.weights);
    CHECK(m2.profile.inv_delta == m.profile.inv_delta);
    CHECK(m2.channel->theta == m.channel->theta);
    CHECK(m2.labels.at("note") == "round trip");
    // serialization is stable
    CHECK(to_json(m).dump() == to_json(m2).dump());
}

TEST_CASE("float formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.0 / 7.0e10, -3.14159e-20,
                     277.77777777777777}) {
        std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("matrix binary round trip") {
    std::mt19937 gen(2);
    std::normal_distribution<double> nd;
    int n = 17;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            a(i, j) = nd(gen);
            a(j, i) = a(i, j);
        }
    std::string path = "io_test_matrix.bin";
    write_matrix_binary(path, a);
    Matrix b = read_matrix_binary(path);
    CHECK(a == b);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_matrix_binary("no_such_file.bin"), IoError);
}

TEST_CASE("csv writer") {
    std::string path = "io_test_table.csv";
    {
        CsvWriter csv(path, {"x", "y"});
        csv.row({format_double(0.5), format_double(1.0 / 3.0)});
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,y");
    std::getline(in, line);
    CHECK(line == "0.5,0.33333333333333331");
    std::remove(path.c_str());
}
