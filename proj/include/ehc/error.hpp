#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ehc {

// Base for every failure the library reports. `code()` is a stable
// machine-readable identifier (snake_case) used in logs and CLI output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define EHC_DEFINE_ERROR(Name, code_str)                                   \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& message) : Error(code_str, message) {} \
    };

// configuration
EHC_DEFINE_ERROR(ConfigError, "config_error")

// ingest
EHC_DEFINE_ERROR(SourceUnavailable, "source_unavailable")
EHC_DEFINE_ERROR(SchemaMismatch, "schema_mismatch")
EHC_DEFINE_ERROR(DuplicateSortOrder, "duplicate_sort_order")
EHC_DEFINE_ERROR(AllSourcesFailed, "all_sources_failed")

// geo
EHC_DEFINE_ERROR(MissingRegionId, "missing_region_id")
EHC_DEFINE_ERROR(DegenerateRing, "degenerate_ring")
EHC_DEFINE_ERROR(DuplicateRegionId, "duplicate_region_id")
EHC_DEFINE_ERROR(UnknownRegion, "unknown_region")
EHC_DEFINE_ERROR(InvalidGeometry, "invalid_geometry")

// stats
EHC_DEFINE_ERROR(InsufficientData, "insufficient_data")
EHC_DEFINE_ERROR(EmptyRegion, "empty_region")
EHC_DEFINE_ERROR(EmptyInput, "empty_input")
EHC_DEFINE_ERROR(InvalidParameter, "invalid_parameter")

// store
EHC_DEFINE_ERROR(StorageUnavailable, "storage_unavailable")
EHC_DEFINE_ERROR(HashMismatch, "hash_mismatch")
EHC_DEFINE_ERROR(NoSnapshot, "no_snapshot")
EHC_DEFINE_ERROR(CorruptSnapshot, "corrupt_snapshot")

#undef EHC_DEFINE_ERROR

class CsvMalformed : public Error {
public:
    CsvMalformed(std::size_t line, const std::string& what)
        : Error("csv_malformed", "line " + std::to_string(line) + ": " + what), line_(line) {}

    // 1-based physical line in the source document (header is line 1).
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ehc
