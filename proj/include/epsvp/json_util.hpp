#pragma once

#include <epsvp/errors.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace epsvp::json_util {

inline nlohmann::json parse(std::string_view text)
{
    try {
        return nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class T>
T required(const nlohmann::json& j, const char* key, const std::string& owner)
{
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError("'" + owner + "': missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError("'" + owner + "': field '" + key + "' has the wrong type");
    }
}

template <class T>
T optional(const nlohmann::json& j, const char* key, T fallback, const std::string& owner)
{
    if (!j.is_object() || !j.contains(key)) return fallback;
    return required<T>(j, key, owner);
}

} // namespace epsvp::json_util
