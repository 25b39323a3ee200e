#pragma once

// Sectioned "key = value" text configuration with line-precise diagnostics.
//
//   # comment
//   [section]
//   key = value   ; trailing comment

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lcs/curve.hpp"
#include "lcs/error.hpp"

namespace lcs {

class Config {
  public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    Config() = default;

    static Config parse(std::string_view text, std::string origin = "<config>") {
        Config cfg;
        cfg.origin_ = std::move(origin);
        std::string section;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t end = std::min(text.find('\n', pos), text.size());
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
            if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
            line = trim(line);
            if (line.empty()) {
                if (end == text.size()) break;
                continue;
            }
            if (line.front() == '[') {
                if (line.back() != ']') throw cfg.error(line_no, "unterminated section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (section.empty() || !valid_name(section)) throw cfg.error(line_no, "bad section name");
                cfg.sections_.insert(section);
            } else {
                const auto eq = line.find('=');
                if (eq == std::string_view::npos) throw cfg.error(line_no, "expected 'key = value'");
                const std::string key(trim(line.substr(0, eq)));
                const std::string value(trim(line.substr(eq + 1)));
                if (key.empty() || !valid_name(key)) throw cfg.error(line_no, "bad key name");
                if (section.empty()) throw cfg.error(line_no, "key '" + key + "' appears before any [section]");
                const std::string full = section + "." + key;
                if (cfg.entries_.contains(full))
                    throw cfg.error(line_no, "duplicate key '" + full + "' (first set on line " +
                                                 std::to_string(cfg.entries_[full].line) + ")");
                cfg.entries_[full] = {value, line_no};
            }
            if (end == text.size()) break;
        }
        return cfg;
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open config file '" + path.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    /// Applies "section.key=value" (from the command line); overrides win.
    void set(const std::string& assignment) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override '" + assignment + "' must look like section.key=value");
        const std::string full(trim(std::string_view(assignment).substr(0, eq)));
        const std::string value(trim(std::string_view(assignment).substr(eq + 1)));
        entries_[full] = {value, 0};
        sections_.insert(full.substr(0, full.find('.')));
    }

    bool has(const std::string& key) const { return entries_.contains(key); }

    std::string get_string(const std::string& key, const std::string& fallback) {
        const auto* e = find(key);
        return e ? e->value : fallback;
    }

    double get_double(const std::string& key, double fallback) {
        const auto* e = find(key);
        if (!e) return fallback;
        double v = 0.0;
        const auto* first = e->value.data();
        const auto* last = first + e->value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || !std::isfinite(v))
            throw error(*e, key, "expected a finite number, got '" + e->value + "'");
        return v;
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
        const auto* e = find(key);
        if (!e) return fallback;
        std::uint64_t v = 0;
        const auto* first = e->value.data();
        const auto* last = first + e->value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last)
            throw error(*e, key, "expected a nonnegative integer, got '" + e->value + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) {
        const auto* e = find(key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "yes" || e->value == "1" || e->value == "on") return true;
        if (e->value == "false" || e->value == "no" || e->value == "0" || e->value == "off") return false;
        throw error(*e, key, "expected true or false, got '" + e->value + "'");
    }

    /// Rejects any key that no getter asked for.
    void reject_unknown() const {
        for (const auto& [key, e] : entries_)
            if (!used_.contains(key)) throw error(e, key, "unknown key '" + key + "'");
    }

    /// Error located at a key's line (or at the override when set on the
    /// command line).
    ConfigError error(const Entry& e, const std::string& key, const std::string& message) const {
        if (e.line == 0) return ConfigError("override " + key + ": " + message);
        return ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + message);
    }

    ConfigError error_at(const std::string& key, const std::string& message) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return ConfigError(key + ": " + message);
        return error(it->second, key, message);
    }

    const std::string& origin() const noexcept { return origin_; }

  private:
    static std::string_view trim(std::string_view s) noexcept {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static bool valid_name(std::string_view s) noexcept {
        for (char c : s)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
        return true;
    }

    ConfigError error(std::size_t line, const std::string& message) const {
        return ConfigError(origin_ + ":" + std::to_string(line) + ": " + message);
    }

    const Entry* find(const std::string& key) {
        used_.insert(key);
        const auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::string origin_ = "<config>";
    std::map<std::string, Entry> entries_;
    std::set<std::string> sections_;
    std::set<std::string> used_;
};

/// Builds "key = value" text grouped by section, preserving insertion order.
class ConfigWriter {
  public:
    void section(const std::string& name) {
        if (!text_.empty()) text_ += '\n';
        text_ += "[" + name + "]\n";
    }
    void put(const std::string& key, const std::string& value) { text_ += key + " = " + value + "\n"; }
    void put(const std::string& key, double value) { put(key, format_double(value)); }
    void put(const std::string& key, std::uint64_t value) { put(key, std::to_string(value)); }
    void put(const std::string& key, bool value) { put(key, std::string(value ? "true" : "false")); }
    void put(const std::string& key, const char* value) { put(key, std::string(value)); }

    const std::string& str() const noexcept { return text_; }

  private:
    std::string text_;
};

} // namespace lcs
