#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "relay/rng.hpp"

namespace relay {

struct TraceBlock {
    std::int64_t height = 0;
    std::string service_id;
    std::int64_t relay_count = 0;
    std::vector<std::pair<std::string, std::int64_t>> breakdown;  // optional per-app counts
};

struct MalformedTraceError : std::runtime_error {
    std::size_t line;
    MalformedTraceError(std::size_t line_no, const std::string& why)
        : std::runtime_error("trace line " + std::to_string(line_no) + ": " + why),
          line(line_no) {}
};

/**
 * CSV schema: header `height,service_id,relay_count[,app_id,app_count]*`;
 * per service the heights must be contiguous and ascending, and a breakdown,
 * when present, must sum to the relay count.
 */
std::vector<TraceBlock> load_trace(std::istream& in);
std::vector<TraceBlock> load_trace_file(const std::string& path);
void save_trace(std::ostream& out, const std::vector<TraceBlock>& trace);

enum class TraceShape { steady, soft_surge, step_drop, step_surge };

TraceShape parse_shape(const std::string& name);  // throws std::invalid_argument
const char* to_string(TraceShape s);

struct InvalidShapeParamsError : std::invalid_argument {
    explicit InvalidShapeParamsError(const std::string& why)
        : std::invalid_argument("synth trace: " + why) {}
};

struct SynthParams {
    TraceShape shape = TraceShape::steady;
    std::string service_id = "svc-0";
    std::int64_t start_height = 0;
    std::int64_t blocks = 0;        // total length; 0 picks the shape default
    std::int64_t event_start = -1;  // block offset where the level change begins
    std::int64_t event_blocks = -1; // ramp length; step shapes must finish within 4 blocks
    double level_before = -1.0;
    double level_after = -1.0;
    double noise = 0.0;             // relative gaussian noise on the level

    /** Fill any unset field with the shape's default scenario. */
    SynthParams resolved() const;
};

std::vector<TraceBlock> synth_trace(const SynthParams& params, Rng rng);

}  // namespace relay
