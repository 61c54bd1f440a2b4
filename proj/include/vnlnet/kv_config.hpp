#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace vnl {

/// Flat `key = value` settings; '#' starts a comment.
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues read(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    /// Throws naming the first key not in `known`.
    void require_known(const std::set<std::string>& known) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace vnl
