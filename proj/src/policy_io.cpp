#include "qaoi/policy_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qaoi/errors.hpp"

namespace qaoi {

namespace {

constexpr const char* kMagic = "# qaoi policy v1";

std::string expect_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(std::string("policy file truncated before ") + what);
    }
    return line;
}

} // namespace

PolicyFile make_policy_file(const ModelConfig& config, const Policy& policy,
                            const ValueFunction* value) {
    check_policy(config, policy);
    const StateSpace space(config);
    PolicyFile file;
    file.config_hash = config_hash(config);
    file.delta_max = space.delta_max();
    file.bucket_size = space.bucket_size();
    file.n_err = space.n_err();
    file.n_query = space.n_query();
    file.cost = config.cost;
    file.policy = policy;
    if (value != nullptr) {
        if (value->size() != space.size()) {
            throw IndexMismatch("value function size does not match the model");
        }
        file.value = *value;
    }
    return file;
}

void write_policy(std::ostream& out, const PolicyFile& file) {
    const StateSpace space(file.delta_max, file.bucket_size, file.n_err, file.n_query);
    char buf[160];
    std::snprintf(buf, sizeof buf, "config_hash %016" PRIx64 "\n", file.config_hash);
    out << kMagic << '\n' << buf;
    out << "dims " << file.delta_max << ' ' << file.bucket_size << ' ' << file.n_err << ' '
        << file.n_query << '\n';
    out << "cost " << to_string(file.cost) << '\n';
    out << "columns index age tokens err_state query_state action" << (file.value ? " value" : "")
        << '\n';
    for (std::size_t i = 0; i < file.policy.size(); ++i) {
        const SystemState s = space.state(i);
        int len = std::snprintf(buf, sizeof buf, "%zu %zu %zu %zu %zu %u", i, s.age, s.tokens,
                                s.err_state, s.query_state,
                                static_cast<unsigned>(file.policy.actions[i]));
        if (file.value) {
            len += std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len), " %.17g",
                                 file.value->values[i]);
        }
        out.write(buf, len);
        out.put('\n');
    }
}

void write_policy(const std::filesystem::path& path, const PolicyFile& file) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    write_policy(out, file);
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

PolicyFile read_policy(std::istream& in) {
    if (expect_line(in, "magic") != kMagic) {
        throw ParseError("not a qaoi policy v1 file");
    }
    PolicyFile file;
    {
        std::istringstream line(expect_line(in, "config_hash"));
        std::string key, hex;
        line >> key >> hex;
        if (key != "config_hash" || hex.size() != 16) {
            throw ParseError("bad config_hash line");
        }
        file.config_hash = std::stoull(hex, nullptr, 16);
    }
    {
        std::istringstream line(expect_line(in, "dims"));
        std::string key;
        line >> key >> file.delta_max >> file.bucket_size >> file.n_err >> file.n_query;
        if (key != "dims" || !line || file.delta_max == 0 || file.n_err == 0 || file.n_query == 0) {
            throw ParseError("bad dims line");
        }
    }
    {
        std::istringstream line(expect_line(in, "cost"));
        std::string key, kind;
        line >> key >> kind;
        if (key != "cost") {
            throw ParseError("bad cost line");
        }
        file.cost = parse_cost_kind(kind);
    }
    const std::string columns = expect_line(in, "columns");
    bool with_value = false;
    if (columns == "columns index age tokens err_state query_state action value") {
        with_value = true;
    } else if (columns != "columns index age tokens err_state query_state action") {
        throw ParseError("unexpected columns line");
    }

    const StateSpace space(file.delta_max, file.bucket_size, file.n_err, file.n_query);
    file.policy.actions.resize(space.size());
    std::vector<double> values(with_value ? space.size() : 0);
    std::string text;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (!std::getline(in, text)) {
            throw ParseError("policy file has fewer rows than its dims declare");
        }
        std::istringstream row(text);
        std::size_t index = 0;
        SystemState s;
        unsigned action = 0;
        row >> index >> s.age >> s.tokens >> s.err_state >> s.query_state >> action;
        if (with_value) {
            row >> values[i];
        }
        if (!row || index != i || action > 1 || !(s == space.state(i))) {
            throw ParseError("malformed policy row " + std::to_string(i));
        }
        file.policy.actions[i] = static_cast<std::uint8_t>(action);
    }
    if (with_value) {
        file.value = ValueFunction{std::move(values)};
    }
    return file;
}

PolicyFile read_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return read_policy(in);
}

void check_compatible(const PolicyFile& file, const ModelConfig& config) {
    const StateSpace space(config);
    if (file.delta_max != space.delta_max() || file.bucket_size != space.bucket_size() ||
        file.n_err != space.n_err() || file.n_query != space.n_query()) {
        throw IndexMismatch("policy dimensions do not match the model");
    }
    // The cost kind does not change the state space, so a PQ policy may be
    // simulated under a QAPA model and vice versa; everything else must agree.
    ModelConfig same_cost = config;
    same_cost.cost = file.cost;
    if (config_hash(same_cost) != file.config_hash) {
        throw IndexMismatch("policy was solved for a different model configuration");
    }
}

} // namespace qaoi
