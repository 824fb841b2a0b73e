#include "drumscribe/config.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drumscribe/errors.hpp"

namespace drumscribe {

namespace {

constexpr std::array<const char*, 24> kKnownKeys = {
    "train.lr",       "train.beta1",     "train.beta2",     "train.eps",
    "train.batch",    "train.epochs",    "train.seed",      "train.arch",
    "train.augment",  "dsp.n_fft",       "dsp.hop",         "dsp.n_mels",
    "dsp.f_min",      "dsp.f_max",       "dsp.sample_rate", "dsp.top_db",
    "vit.image_size", "vit.patch_size",  "vit.embed_dim",   "vit.depth",
    "vit.num_heads",  "vit.mlp_ratio",   "vit.num_classes", "vit.dropout",
};

bool known_key(const std::string& key) {
    for (const char* k : kKnownKeys)
        if (key == k) return true;
    return false;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
    throw ConfigError("config: key '" + key + "' expects " + expected + ", got '" + value + "'");
}

int64_t parse_int(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    long long v = std::strtoll(begin, &end, 10);
    if (errno != 0 || end == begin || *end != '\0') bad_value(key, value, "an integer");
    return v;
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(begin, &end, 10);
    if (errno != 0 || end == begin || *end != '\0' || value.find('-') != std::string::npos)
        bad_value(key, value, "a nonnegative integer");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (errno != 0 || end == begin || *end != '\0') bad_value(key, value, "a number");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "off" || value == "no" || value == "0") return false;
    bad_value(key, value, "a boolean (true/false)");
}

}  // namespace

KvConfig KvConfig::from_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open config file " + path.string());
    std::ostringstream text;
    text << f.rdbuf();
    return from_string(text.str(), path.string());
}

KvConfig KvConfig::from_string(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": expected 'section.key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": expected 'section.key = value'");
        try {
            cfg.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (" + origin + ":" +
                              std::to_string(lineno) + ")");
        }
    }
    return cfg;
}

void KvConfig::set(const std::string& key, const std::string& value) {
    if (!known_key(key)) throw ConfigError("config: unknown key '" + key + "'");
    values_[key] = value;
}

void KvConfig::set_from_assignment(const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: override '" + assignment + "' is not of the form key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (key.empty() || value.empty())
        throw ConfigError("config: override '" + assignment + "' is not of the form key=value");
    set(key, value);
}

std::optional<std::string> KvConfig::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

TrainConfig KvConfig::train() const {
    TrainConfig cfg;
    if (auto v = raw("train.lr")) cfg.lr = parse_double("train.lr", *v);
    if (auto v = raw("train.beta1")) cfg.beta1 = parse_double("train.beta1", *v);
    if (auto v = raw("train.beta2")) cfg.beta2 = parse_double("train.beta2", *v);
    if (auto v = raw("train.eps")) cfg.eps = parse_double("train.eps", *v);
    if (auto v = raw("train.batch")) cfg.batch = static_cast<int>(parse_int("train.batch", *v));
    if (auto v = raw("train.epochs")) cfg.epochs = static_cast<int>(parse_int("train.epochs", *v));
    if (auto v = raw("train.seed")) cfg.seed = parse_uint("train.seed", *v);
    if (auto v = raw("train.arch")) cfg.arch = *v;
    if (auto v = raw("train.augment")) cfg.augment = parse_bool("train.augment", *v);
    cfg.validate();
    return cfg;
}

DspConfig KvConfig::dsp() const {
    DspConfig cfg;
    if (auto v = raw("dsp.n_fft")) cfg.n_fft = static_cast<int>(parse_int("dsp.n_fft", *v));
    if (auto v = raw("dsp.hop")) cfg.hop = static_cast<int>(parse_int("dsp.hop", *v));
    if (auto v = raw("dsp.n_mels")) cfg.n_mels = static_cast<int>(parse_int("dsp.n_mels", *v));
    if (auto v = raw("dsp.f_min")) cfg.f_min = parse_double("dsp.f_min", *v);
    if (auto v = raw("dsp.f_max")) cfg.f_max = parse_double("dsp.f_max", *v);
    if (auto v = raw("dsp.sample_rate"))
        cfg.sample_rate = static_cast<int>(parse_int("dsp.sample_rate", *v));
    if (auto v = raw("dsp.top_db")) cfg.top_db = parse_double("dsp.top_db", *v);
    cfg.validate();
    return cfg;
}

VitConfig KvConfig::vit() const {
    VitConfig cfg;
    if (auto v = raw("vit.image_size"))
        cfg.image_size = static_cast<int>(parse_int("vit.image_size", *v));
    if (auto v = raw("vit.patch_size"))
        cfg.patch_size = static_cast<int>(parse_int("vit.patch_size", *v));
    if (auto v = raw("vit.embed_dim"))
        cfg.embed_dim = static_cast<int>(parse_int("vit.embed_dim", *v));
    if (auto v = raw("vit.depth")) cfg.depth = static_cast<int>(parse_int("vit.depth", *v));
    if (auto v = raw("vit.num_heads"))
        cfg.num_heads = static_cast<int>(parse_int("vit.num_heads", *v));
    if (auto v = raw("vit.mlp_ratio"))
        cfg.mlp_ratio = static_cast<int>(parse_int("vit.mlp_ratio", *v));
    if (auto v = raw("vit.num_classes"))
        cfg.num_classes = static_cast<int>(parse_int("vit.num_classes", *v));
    if (auto v = raw("vit.dropout")) cfg.dropout = parse_double("vit.dropout", *v);
    cfg.validate();
    return cfg;
}

}  // namespace drumscribe
