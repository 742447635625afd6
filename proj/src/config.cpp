#include "acqsens/config.hpp"

#include "acqsens/errors.hpp"

#include <fstream>
#include <sstream>

namespace acqsens {

namespace {

nlohmann::json parse_json(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::InvalidConfig, "invalid JSON in " + what + ": " + e.what());
    }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_json(buffer.str(), path.string());
}

} // namespace

nlohmann::ordered_json space_to_json(const ParameterSpace& space) {
    nlohmann::ordered_json j;
    auto axes = nlohmann::ordered_json::array();
    for (const auto& a : space.axes()) {
        nlohmann::ordered_json axis;
        axis["name"] = a.name;
        axis["min"] = a.min;
        axis["max"] = a.max;
        axis["bins"] = a.bins;
        axis["direction"] =
            a.direction == QualityDirection::Increasing ? "increasing" : "decreasing";
        axis["scale"] = a.scale;
        axes.push_back(std::move(axis));
    }
    j["axes"] = std::move(axes);
    return j;
}

ParameterSpace space_from_json(const nlohmann::json& j) {
    if (!j.contains("axes") || !j["axes"].is_array() || j["axes"].empty())
        fail(ErrorCode::InvalidConfig, "space requires a non-empty 'axes' array");
    std::vector<Axis> axes;
    for (const auto& a : j["axes"]) {
        Axis axis;
        axis.name = a.at("name").get<std::string>();
        axis.min = a.at("min").get<double>();
        axis.max = a.at("max").get<double>();
        if (a.contains("bins")) axis.bins = a["bins"].get<int>();
        std::string dir = a.value("direction", "increasing");
        if (dir == "increasing")
            axis.direction = QualityDirection::Increasing;
        else if (dir == "decreasing")
            axis.direction = QualityDirection::Decreasing;
        else
            fail(ErrorCode::InvalidConfig,
                 "axis '" + axis.name + "' direction must be 'increasing' or 'decreasing'");
        axis.scale = a.value("scale", 1.0);
        axes.push_back(std::move(axis));
    }
    return ParameterSpace(std::move(axes));
}

nlohmann::ordered_json region_to_json(const ThresholdConfig& config, const ParameterSpace& space) {
    nlohmann::ordered_json j;
    auto axes = nlohmann::ordered_json::array();
    for (const auto& a : space.axes()) axes.push_back(a.name);
    j["axes"] = std::move(axes);
    j["thresholds"] = config.thresholds;
    return j;
}

ThresholdConfig region_from_json(const nlohmann::json& j, const ParameterSpace& space) {
    ThresholdConfig config;
    // Accept either a bare array or {"thresholds": [...]}.
    const nlohmann::json& arr = j.is_array() ? j : j.at("thresholds");
    if (!arr.is_array() || arr.size() != space.dim())
        fail(ErrorCode::DimensionMismatch, "region must list one threshold per axis");
    for (const auto& v : arr) config.thresholds.push_back(v.get<double>());
    for (std::size_t i = 0; i < space.dim(); ++i) {
        const Axis& axis = space.axis(i);
        if (config.thresholds[i] < axis.min || config.thresholds[i] > axis.max)
            fail(ErrorCode::OutOfRange,
                 "threshold for axis '" + axis.name + "' outside [min, max]");
    }
    return config;
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        fail(ErrorCode::InvalidConfig, "config requires schema_version 1");
    c.space = space_from_json(j.at("space"));
    c.alpha = j.value("alpha", 0.05);
    if (!(c.alpha > 0.0 && c.alpha < 1.0))
        fail(ErrorCode::InvalidConfig, "alpha must lie in (0,1)");
    c.decision_threshold = j.value("decision_threshold", 0.5);
    if (!(c.decision_threshold > 0.0 && c.decision_threshold < 1.0))
        fail(ErrorCode::InvalidConfig, "decision_threshold must lie in (0,1)");
    c.min_group = j.value("min_group", 10);
    if (c.min_group < 1) fail(ErrorCode::InvalidConfig, "min_group must be >= 1");
    if (j.contains("constraints")) {
        for (const auto& jc : j["constraints"]) {
            AxisConstraint ac;
            ac.axis = jc.at("axis").get<std::string>();
            if (c.space.axis_index(ac.axis) < 0)
                fail(ErrorCode::InvalidConfig, "constraint on unknown axis '" + ac.axis + "'");
            if (jc.contains("min")) ac.min = jc["min"].get<double>();
            if (jc.contains("max")) ac.max = jc["max"].get<double>();
            c.constraints.push_back(std::move(ac));
        }
    }
    if (j.contains("reference_method") && !j["reference_method"].is_null())
        c.reference_method = j["reference_method"].get<std::string>();
    std::string oor = j.value("out_of_range", "strict");
    if (oor == "strict")
        c.out_of_range = OutOfRangePolicy::Strict;
    else if (oor == "clamp")
        c.out_of_range = OutOfRangePolicy::Clamp;
    else
        fail(ErrorCode::InvalidConfig, "out_of_range must be 'strict' or 'clamp'");
    c.bh_correction = j.value("bh_correction", false);
    std::string dom = j.value("dominance", "quality");
    if (dom == "quality")
        c.dominance = DominanceOrder::QualityMaximal;
    else if (dom == "reverse")
        c.dominance = DominanceOrder::QualityMinimal;
    else
        fail(ErrorCode::InvalidConfig, "dominance must be 'quality' or 'reverse'");
    c.firth = j.value("firth", false);
    c.d_grid_points = j.value("d_grid_points", 101);
    if (c.d_grid_points < 2) fail(ErrorCode::InvalidConfig, "d_grid_points must be >= 2");
    c.threads = j.value("threads", 1);
    if (c.threads < 1) fail(ErrorCode::InvalidConfig, "threads must be >= 1");
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    return config_from_json(read_json_file(path));
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["space"] = space_to_json(c.space);
    j["alpha"] = c.alpha;
    j["decision_threshold"] = c.decision_threshold;
    j["min_group"] = c.min_group;
    auto constraints = nlohmann::ordered_json::array();
    for (const auto& ac : c.constraints) {
        nlohmann::ordered_json jc;
        jc["axis"] = ac.axis;
        if (ac.min) jc["min"] = *ac.min;
        if (ac.max) jc["max"] = *ac.max;
        constraints.push_back(std::move(jc));
    }
    j["constraints"] = std::move(constraints);
    if (c.reference_method)
        j["reference_method"] = *c.reference_method;
    else
        j["reference_method"] = nullptr;
    j["out_of_range"] = c.out_of_range == OutOfRangePolicy::Strict ? "strict" : "clamp";
    j["bh_correction"] = c.bh_correction;
    j["dominance"] = c.dominance == DominanceOrder::QualityMaximal ? "quality" : "reverse";
    j["firth"] = c.firth;
    j["d_grid_points"] = c.d_grid_points;
    j["threads"] = c.threads;
    j["seed"] = c.seed;
    return j;
}

} // namespace acqsens
