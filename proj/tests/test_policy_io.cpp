#include <doctest.h>

#include <cstring>
#include <sstream>

#include "qaoi/errors.hpp"
#include "qaoi/policy_io.hpp"

using namespace qaoi;

namespace {

ModelConfig sample_model(CostKind cost = CostKind::QueryAware) {
    return ModelConfig{12, 3, 0.2, 0.75, cost, build_satellite_error(4, 0.3), build_uniform_query(2, 5)};
}

} // namespace

TEST_CASE("policy files round-trip bit for bit") {
    const ModelConfig cfg = sample_model();
    const SolveReport r = policy_iteration(cfg);
    const PolicyFile file = make_policy_file(cfg, r.policy, &r.value);

    std::stringstream buf;
    write_policy(buf, file);
    const std::string text = buf.str();
    const PolicyFile back = read_policy(buf);
    CHECK(back.config_hash == config_hash(cfg));
    CHECK(back.delta_max == 12);
    CHECK(back.bucket_size == 3);
    CHECK(back.n_err == 4);
    CHECK(back.n_query == 5);
    CHECK(back.cost == CostKind::QueryAware);
    CHECK(back.policy == r.policy);
    REQUIRE(back.value.has_value());
    CHECK(std::memcmp(back.value->values.data(), r.value.values.data(), r.value.size() * sizeof(double)) == 0);

    std::stringstream again;
    write_policy(again, back);
    CHECK(again.str() == text);
}

TEST_CASE("layout of the header and rows") {
    const ModelConfig cfg{2, 1, 0.5, 0.75, CostKind::PermanentQuery, build_constant_error(0.0), build_periodic_query(1)};
    Policy p = silent_policy(cfg);
    p.actions[3] = 1;
    std::stringstream buf;
    write_policy(buf, make_policy_file(cfg, p));
    std::string line;
    std::getline(buf, line);
    CHECK(line == "# qaoi policy v1");
    std::getline(buf, line);
    CHECK(line.rfind("config_hash ", 0) == 0);
    CHECK(line.size() == std::strlen("config_hash ") + 16);
    std::getline(buf, line);
    CHECK(line == "dims 2 1 1 1");
    std::getline(buf, line);
    CHECK(line == "cost PQ");
    std::getline(buf, line);
    CHECK(line == "columns index age tokens err_state query_state action");
    std::getline(buf, line);
    CHECK(line == "0 1 0 0 0 0");
    std::getline(buf, line);
    CHECK(line == "1 1 1 0 0 0");
    std::getline(buf, line);
    CHECK(line == "2 2 0 0 0 0");
    std::getline(buf, line);
    CHECK(line == "3 2 1 0 0 1");
    CHECK_FALSE(std::getline(buf, line));
}

TEST_CASE("malformed input is rejected") {
    const ModelConfig cfg = sample_model();
    std::stringstream good;
    write_policy(good, make_policy_file(cfg, silent_policy(cfg)));
    const std::string text = good.str();

    const auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return read_policy(in);
    };
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("# qaoi policy v2\n"), ParseError);
    CHECK_THROWS_AS(parse(text.substr(0, text.size() / 2)), ParseError);
    std::string bad_action = text;
    bad_action[bad_action.size() - 2] = '7';
    CHECK_THROWS_AS(parse(bad_action), ParseError);
    std::string bad_cost = text;
    bad_cost.replace(bad_cost.find("cost QAPA"), 9, "cost XYZW");
    CHECK_THROWS_AS(parse(bad_cost), ParseError);
}

TEST_CASE("compatibility with a model") {
    const ModelConfig cfg = sample_model();
    const PolicyFile file = make_policy_file(cfg, silent_policy(cfg));
    CHECK_NOTHROW(check_compatible(file, cfg));
    CHECK_NOTHROW(check_compatible(file, sample_model(CostKind::PermanentQuery)));

    ModelConfig other = cfg;
    other.token_rate = 0.3;
    CHECK_THROWS_AS(check_compatible(file, other), IndexMismatch);
    ModelConfig smaller = cfg;
    smaller.delta_max = 11;
    CHECK_THROWS_AS(check_compatible(file, smaller), IndexMismatch);
}
