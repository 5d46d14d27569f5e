#include "relay/trace.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace relay {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::int64_t parse_count(const std::string& s, std::size_t line_no, const char* what) {
    if (s.empty()) throw MalformedTraceError(line_no, std::string("empty ") + what);
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw MalformedTraceError(line_no, std::string("bad ") + what + ": " + s);
    }
    if (pos != s.size()) throw MalformedTraceError(line_no, std::string("bad ") + what + ": " + s);
    if (v < 0) throw MalformedTraceError(line_no, std::string(what) + " is negative");
    return v;
}

}  // namespace

std::vector<TraceBlock> load_trace(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw MalformedTraceError(1, "empty file");
    line_no = 1;
    if (line.rfind("height,service_id,relay_count", 0) != 0) {
        throw MalformedTraceError(1, "missing header");
    }

    std::vector<TraceBlock> trace;
    std::map<std::string, std::int64_t> last_height;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() < 3) throw MalformedTraceError(line_no, "expected at least 3 columns");
        if ((cols.size() - 3) % 2 != 0) {
            throw MalformedTraceError(line_no, "breakdown columns must come in pairs");
        }
        TraceBlock b;
        b.height = parse_count(cols[0], line_no, "height");
        b.service_id = cols[1];
        if (b.service_id.empty()) throw MalformedTraceError(line_no, "empty service_id");
        b.relay_count = parse_count(cols[2], line_no, "relay_count");
        std::int64_t breakdown_sum = 0;
        for (std::size_t i = 3; i + 1 < cols.size(); i += 2) {
            std::int64_t c = parse_count(cols[i + 1], line_no, "app_count");
            if (cols[i].empty()) throw MalformedTraceError(line_no, "empty app_id");
            b.breakdown.emplace_back(cols[i], c);
            breakdown_sum += c;
        }
        if (!b.breakdown.empty() && breakdown_sum != b.relay_count) {
            throw MalformedTraceError(line_no, "breakdown does not sum to relay_count");
        }
        auto it = last_height.find(b.service_id);
        if (it != last_height.end()) {
            if (b.height == it->second) throw MalformedTraceError(line_no, "duplicate height");
            if (b.height < it->second) throw MalformedTraceError(line_no, "heights not ascending");
            if (b.height != it->second + 1) throw MalformedTraceError(line_no, "gap in heights");
        }
        last_height[b.service_id] = b.height;
        trace.push_back(std::move(b));
    }
    if (trace.empty()) throw MalformedTraceError(line_no, "no data rows");
    return trace;
}

std::vector<TraceBlock> load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedTraceError(0, "cannot open " + path);
    return load_trace(in);
}

void save_trace(std::ostream& out, const std::vector<TraceBlock>& trace) {
    out << "height,service_id,relay_count\n";
    for (const auto& b : trace) {
        out << b.height << ',' << b.service_id << ',' << b.relay_count;
        for (const auto& [app, count] : b.breakdown) out << ',' << app << ',' << count;
        out << '\n';
    }
}

TraceShape parse_shape(const std::string& name) {
    if (name == "steady") return TraceShape::steady;
    if (name == "soft-surge") return TraceShape::soft_surge;
    if (name == "step-drop") return TraceShape::step_drop;
    if (name == "step-surge") return TraceShape::step_surge;
    throw std::invalid_argument("unknown trace shape: " + name);
}

const char* to_string(TraceShape s) {
    switch (s) {
        case TraceShape::steady: return "steady";
        case TraceShape::soft_surge: return "soft-surge";
        case TraceShape::step_drop: return "step-drop";
        case TraceShape::step_surge: return "step-surge";
    }
    return "unknown";
}

SynthParams SynthParams::resolved() const {
    SynthParams p = *this;
    switch (shape) {
        case TraceShape::steady:
            if (p.blocks == 0) p.blocks = 560;
            if (p.level_before < 0) p.level_before = 1e6;
            if (p.level_after < 0) p.level_after = p.level_before;
            if (p.event_start < 0) p.event_start = 0;
            if (p.event_blocks < 0) p.event_blocks = 0;
            break;
        case TraceShape::soft_surge:
            if (p.level_before < 0) p.level_before = 2.9e6;
            if (p.level_after < 0) p.level_after = 1.1e7;
            if (p.event_start < 0) p.event_start = 60;
            if (p.event_blocks < 0) p.event_blocks = 175;
            if (p.blocks == 0) p.blocks = p.event_start + p.event_blocks + 100;
            break;
        case TraceShape::step_drop:
            if (p.level_before < 0) p.level_before = 273e3;
            if (p.level_after < 0) p.level_after = 21e3;
            if (p.event_start < 0) p.event_start = 60;
            if (p.event_blocks < 0) p.event_blocks = 1;
            if (p.blocks == 0) p.blocks = p.event_start + p.event_blocks + 100;
            break;
        case TraceShape::step_surge:
            if (p.level_before < 0) p.level_before = 1120;
            if (p.level_after < 0) p.level_after = 276e3;
            if (p.event_start < 0) p.event_start = 60;
            if (p.event_blocks < 0) p.event_blocks = 1;
            if (p.blocks == 0) p.blocks = p.event_start + p.event_blocks + 100;
            break;
    }
    return p;
}

std::vector<TraceBlock> synth_trace(const SynthParams& raw, Rng rng) {
    SynthParams p = raw.resolved();
    if (p.blocks < 1) throw InvalidShapeParamsError("blocks must be >= 1");
    if (p.level_before < 0 || p.level_after < 0) {
        throw InvalidShapeParamsError("levels must be non-negative");
    }
    if (p.noise < 0 || std::isnan(p.noise)) throw InvalidShapeParamsError("noise must be >= 0");
    bool is_step = p.shape == TraceShape::step_drop || p.shape == TraceShape::step_surge;
    if (p.shape != TraceShape::steady) {
        if (p.event_blocks < 1) throw InvalidShapeParamsError("event_blocks must be >= 1");
        if (p.event_start < 0 || p.event_start + p.event_blocks > p.blocks) {
            throw InvalidShapeParamsError("event window exceeds the trace");
        }
        if (is_step && p.event_blocks > 4) {
            throw InvalidShapeParamsError("step shapes must complete within 4 blocks");
        }
        if (p.shape == TraceShape::step_drop && p.level_after >= p.level_before) {
            throw InvalidShapeParamsError("step-drop needs level_after < level_before");
        }
        if ((p.shape == TraceShape::step_surge || p.shape == TraceShape::soft_surge) &&
            p.level_after <= p.level_before) {
            throw InvalidShapeParamsError("surge needs level_after > level_before");
        }
    }

    Rng noise_rng = rng.substream("trace/noise");
    std::vector<TraceBlock> out;
    out.reserve(static_cast<std::size_t>(p.blocks));
    for (std::int64_t i = 0; i < p.blocks; ++i) {
        double level;
        if (p.shape == TraceShape::steady || i < p.event_start) {
            level = p.level_before;
        } else if (i >= p.event_start + p.event_blocks) {
            level = p.level_after;
        } else {
            double frac = static_cast<double>(i - p.event_start + 1) /
                          static_cast<double>(p.event_blocks);
            level = p.level_before + (p.level_after - p.level_before) * frac;
        }
        if (p.noise > 0) level *= 1.0 + p.noise * noise_rng.normal();
        TraceBlock b;
        b.height = p.start_height + i;
        b.service_id = p.service_id;
        b.relay_count = std::max<std::int64_t>(0, std::llround(level));
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace relay
