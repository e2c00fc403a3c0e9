#pragma once

// Line-delimited JSON traces. Line 1 is a run header, every following line
// is one IterationRecord with its fields in declaration order. Doubles are
// written as shortest round-trip decimals, so a trace re-reads bit-exactly.

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "smoothkm/lloyd.hpp"

namespace smoothkm {

using ojson = nlohmann::ordered_json;

inline ojson rows_to_json(const PointSet& ps) {
    ojson out = ojson::array();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        ojson row = ojson::array();
        for (double v : ps[i]) row.push_back(v);
        out.push_back(std::move(row));
    }
    return out;
}

inline PointSet rows_from_json(const ojson& j) {
    std::vector<Point> rows;
    for (const auto& r : j) rows.push_back(r.get<Point>());
    return PointSet::from_rows(rows);
}

inline ojson record_to_json(const IterationRecord& r) {
    ojson j;
    j["kind"] = "iteration";
    j["iteration"] = r.iteration;
    j["potential_before"] = r.potential_before;
    j["potential_after"] = r.potential_after;
    j["drop"] = r.drop;
    ojson cross = ojson::array();
    for (const auto& x : r.reassigned)
        cross.push_back(ojson::array({x.point_index, x.from_cluster, x.to_cluster, x.distance_to_bisector}));
    j["reassigned"] = std::move(cross);
    j["active_clusters"] = r.active_clusters;
    j["center_movements"] = r.center_movements;
    j["min_center_distance"] = r.min_center_distance ? ojson(*r.min_center_distance) : ojson(nullptr);
    j["empty_cluster_events"] = r.empty_cluster_events;
    j["centers_after"] = rows_to_json(r.centers_after);
    j["assignment_hash"] = r.assignment_hash;
    return j;
}

inline IterationRecord record_from_json(const ojson& j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.potential_before = j.at("potential_before").get<double>();
    r.potential_after = j.at("potential_after").get<double>();
    r.drop = j.at("drop").get<double>();
    for (const auto& x : j.at("reassigned"))
        r.reassigned.push_back({x.at(0).get<std::size_t>(), x.at(1).get<std::size_t>(),
                                x.at(2).get<std::size_t>(), x.at(3).get<double>()});
    r.active_clusters = j.at("active_clusters").get<std::size_t>();
    r.center_movements = j.at("center_movements").get<std::vector<double>>();
    if (!j.at("min_center_distance").is_null()) r.min_center_distance = j.at("min_center_distance").get<double>();
    r.empty_cluster_events = j.at("empty_cluster_events").get<std::vector<std::size_t>>();
    r.centers_after = rows_from_json(j.at("centers_after"));
    r.assignment_hash = j.at("assignment_hash").get<std::uint64_t>();
    return r;
}

inline void write_trace(std::ostream& os, const RunTrace& trace) {
    ojson h;
    h["kind"] = "run";
    h["init_method"] = std::string(to_string(trace.init_method));
    h["seed"] = trace.seed;
    h["termination"] = std::string(to_string(trace.termination));
    h["iterations"] = trace.records.size();
    h["initial_centers"] = rows_to_json(trace.initial_centers);
    h["final_assignment"] = trace.final_assignment;
    os << h.dump() << '\n';
    for (const auto& r : trace.records) os << record_to_json(r).dump() << '\n';
}

inline RunTrace read_trace(std::istream& is) {
    RunTrace t;
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const std::exception& e) {
            throw Error(Errc::Parse, "trace line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto kind = j.value("kind", std::string{});
        if (kind == "run") {
            header = true;
            t.init_method = parse_init_method(j.at("init_method").get<std::string>());
            t.seed = j.at("seed").get<std::uint64_t>();
            t.termination = parse_termination(j.at("termination").get<std::string>());
            t.initial_centers = rows_from_json(j.at("initial_centers"));
            t.final_assignment = j.at("final_assignment").get<Assignment>();
        } else if (kind == "iteration") {
            t.records.push_back(record_from_json(j));
        } else {
            throw Error(Errc::Parse, "trace line " + std::to_string(lineno) + ": unknown kind");
        }
    }
    if (!header) throw Error(Errc::Parse, "trace has no run header");
    return t;
}

inline void write_trace_file(const std::string& path, const RunTrace& trace) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(Errc::Io, "cannot open " + path + " for writing");
    write_trace(os, trace);
    if (!os) throw Error(Errc::Io, "write failed for " + path);
}

inline RunTrace read_trace_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(Errc::Io, "cannot open " + path);
    return read_trace(is);
}

}  // namespace smoothkm
