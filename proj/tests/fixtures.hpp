#pragma once

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

// Values computed offline by tests/data/gen_fixtures.py.
inline const nlohmann::json& derived() {
    static const nlohmann::json j = [] {
        std::ifstream in(std::string(UWB_TEST_DATA_DIR) + "/derived_fixtures.json");
        if (!in) throw std::runtime_error("derived_fixtures.json not found");
        return nlohmann::json::parse(in);
    }();
    return j;
}
