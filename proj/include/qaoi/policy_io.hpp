#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "qaoi/model.hpp"
#include "qaoi/solver.hpp"

namespace qaoi {

/**
 * Plain-text policy file, version 1:
 *
 *     # qaoi policy v1
 *     config_hash 89abcdef01234567
 *     dims <delta_max> <bucket_size> <n_err> <n_query>
 *     cost PQ
 *     columns index age tokens err_state query_state action value
 *     0 1 0 0 0 0 12.345678901234567
 *     ...
 *
 * One row per canonical state index, fields separated by one space, lines
 * ending in '\n'. The hash is 16 lowercase hex digits. The value column is
 * present only when the header's columns line lists it and is printed with
 * %.17g so that it round-trips exactly.
 */
struct PolicyFile {
    std::uint64_t config_hash = 0;
    std::size_t delta_max = 0;
    std::size_t bucket_size = 0;
    std::size_t n_err = 0;
    std::size_t n_query = 0;
    CostKind cost = CostKind::PermanentQuery;
    Policy policy;
    std::optional<ValueFunction> value;
};

PolicyFile make_policy_file(const ModelConfig& config, const Policy& policy,
                            const ValueFunction* value = nullptr);

void write_policy(std::ostream& out, const PolicyFile& file);
void write_policy(const std::filesystem::path& path, const PolicyFile& file);

/// Throws ParseError on malformed input.
PolicyFile read_policy(std::istream& in);
PolicyFile read_policy(const std::filesystem::path& path);

/// Throws IndexMismatch when the file was not produced for `config`.
void check_compatible(const PolicyFile& file, const ModelConfig& config);

} // namespace qaoi
