#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "drumscribe/dsp.hpp"
#include "drumscribe/train.hpp"
#include "drumscribe/vit.hpp"

namespace drumscribe {

/// Flat `section.key = value` configuration. A `#` starts a comment that
/// runs to the end of the line, blank lines are skipped, and every key must
/// be one of the known TrainConfig / DspConfig / VitConfig fields; anything
/// else is a ConfigError so typos never pass silently. Later assignments
/// win, which is also how command-line overrides are layered on top of a
/// file.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig from_file(const std::filesystem::path& path);
    static KvConfig from_string(const std::string& text, const std::string& origin = "<config>");

    /// Validates the key (and, for enum-like keys, the value) before storing.
    void set(const std::string& key, const std::string& value);

    /// Applies a `section.key=value` override, e.g. from a --set flag.
    void set_from_assignment(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> raw(const std::string& key) const;

    /// Materialized config structs: defaults overlaid with any stored values.
    /// Each result is validated before it is returned.
    TrainConfig train() const;
    DspConfig dsp() const;
    VitConfig vit() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace drumscribe
