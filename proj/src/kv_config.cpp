#include "vnlnet/kv_config.hpp"

#include <fstream>
#include <sstream>

#include "vnlnet/tensor.hpp"

namespace vnl {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text)
{
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw Error("config line " + std::to_string(number) + ": empty key");
        kv.values_[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const
{
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int KeyValues::get_int(const std::string& key, int fallback) const
{
    if (!has(key))
        return fallback;
    const std::string v = get(key, "");
    std::size_t used = 0;
    int out = 0;
    try {
        out = std::stoi(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw Error("config key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

double KeyValues::get_double(const std::string& key, double fallback) const
{
    if (!has(key))
        return fallback;
    const std::string v = get(key, "");
    std::size_t used = 0;
    double out = 0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw Error("config key '" + key + "': expected a number, got '" + v + "'");
    return out;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const
{
    if (!has(key))
        return fallback;
    const std::string v = get(key, "");
    if (v == "1" || v == "true" || v == "yes")
        return true;
    if (v == "0" || v == "false" || v == "no")
        return false;
    throw Error("config key '" + key + "': expected true/false, got '" + v + "'");
}

void KeyValues::require_known(const std::set<std::string>& known) const
{
    for (const auto& [key, value] : values_)
        if (!known.count(key))
            throw Error("unknown config key '" + key + "'");
}

}  // namespace vnl
