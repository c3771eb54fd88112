#pragma once

// Strict JSON readers used by the architecture and characterization loaders.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cgra/errors.hpp"

namespace cgra::detail {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void expect_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
    }
}

inline std::int64_t get_int(const nlohmann::json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ParseError(where + key + ": expected an integer");
    return v.get<std::int64_t>();
}

inline double get_number(const nlohmann::json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ParseError(where + key + ": expected a number");
    return v.get<double>();
}

inline bool get_bool(const nlohmann::json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw ParseError(where + key + ": expected a boolean");
    return v.get<bool>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw ParseError(where + key + ": expected a string");
    return v.get<std::string>();
}

inline void require_key(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ParseError(where + ": missing key '" + key + "'");
}

}  // namespace cgra::detail
