#pragma once

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

// Frozen reference values written by golden/generate.py.
inline const nlohmann::json& golden() {
    static const nlohmann::json j = [] {
        std::ifstream f(std::string(MICROBALL_GOLDEN_DIR) + "/oracle.json");
        if (!f) throw std::runtime_error("golden/oracle.json missing");
        return nlohmann::json::parse(f);
    }();
    return j;
}

inline double golden_value(const std::string& group, const std::string& name) {
    return golden().at(group).at(name).at("value").get<double>();
}
