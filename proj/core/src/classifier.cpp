#include "drumscribe/classifier.hpp"

#include <cstdio>
#include <sstream>

#include "drumscribe/cnn.hpp"
#include "drumscribe/errors.hpp"
#include "drumscribe/rnn.hpp"

namespace drumscribe {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int get_int(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) throw FormatError("checkpoint config is missing key '" + key + "'");
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw FormatError("checkpoint config key '" + key + "' has non-integer value '" +
                          it->second + "'");
    }
}

double get_double(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) throw FormatError("checkpoint config is missing key '" + key + "'");
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw FormatError("checkpoint config key '" + key + "' has non-numeric value '" +
                          it->second + "'");
    }
}

/// Copies checkpoint tensors into the model's parameters, matching by name.
void restore_params(ParamList<float> params,
                    const std::vector<std::pair<std::string, Tensor<float>>>& tensors) {
    if (params.size() != tensors.size())
        throw FormatError("checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
    std::map<std::string, Tensor<float>> by_name(tensors.begin(), tensors.end());
    for (auto& p : params) {
        const auto it = by_name.find(p.name);
        if (it == by_name.end())
            throw FormatError("checkpoint is missing tensor '" + p.name + "'");
        if (it->second.shape() != p.tensor.shape())
            throw FormatError("checkpoint tensor '" + p.name + "' has shape " +
                              shape_str(it->second.shape()) + ", model expects " +
                              shape_str(p.tensor.shape()));
        p.tensor.values() = it->second.values();
    }
}

class VitClassifier final : public Classifier {
public:
    VitClassifier(const VitConfig& cfg, uint64_t seed) : model_(init_vit<float>(cfg, seed)) {}

    const std::string& arch() const override {
        static const std::string name = "vit";
        return name;
    }
    uint8_t arch_id() const override { return kArchVit; }

    Tensor<float> forward(const Tensor<float>& input, Rng* dropout_rng) override {
        return vit_forward<float>(input, model_, nullptr, dropout_rng);
    }

    ParamList<float> parameters() override { return model_.parameters(); }

    std::map<std::string, std::string> config() const override {
        const VitConfig& c = model_.cfg;
        return {
            {"vit.image_size", std::to_string(c.image_size)},
            {"vit.patch_size", std::to_string(c.patch_size)},
            {"vit.embed_dim", std::to_string(c.embed_dim)},
            {"vit.depth", std::to_string(c.depth)},
            {"vit.num_heads", std::to_string(c.num_heads)},
            {"vit.mlp_ratio", std::to_string(c.mlp_ratio)},
            {"vit.num_classes", std::to_string(c.num_classes)},
            {"vit.dropout", fmt_double(c.dropout)},
        };
    }

    static VitConfig config_from(const std::map<std::string, std::string>& cfg) {
        VitConfig c;
        c.image_size = get_int(cfg, "vit.image_size");
        c.patch_size = get_int(cfg, "vit.patch_size");
        c.embed_dim = get_int(cfg, "vit.embed_dim");
        c.depth = get_int(cfg, "vit.depth");
        c.num_heads = get_int(cfg, "vit.num_heads");
        c.mlp_ratio = get_int(cfg, "vit.mlp_ratio");
        c.num_classes = get_int(cfg, "vit.num_classes");
        c.dropout = get_double(cfg, "vit.dropout");
        return c;
    }

    VitModel<float> model_;
};

class CnnClassifier final : public Classifier {
public:
    CnnClassifier(const CnnConfig& cfg, uint64_t seed) : model_(init_cnn<float>(cfg, seed)) {}

    const std::string& arch() const override {
        static const std::string name = "cnn";
        return name;
    }
    uint8_t arch_id() const override { return kArchCnn; }

    Tensor<float> forward(const Tensor<float>& input, Rng*) override {
        return cnn_forward(input, model_);
    }

    ParamList<float> parameters() override { return model_.parameters(); }

    std::map<std::string, std::string> config() const override {
        const CnnConfig& c = model_.cfg;
        std::string channels;
        for (size_t i = 0; i < c.channels.size(); ++i) {
            if (i) channels += ',';
            channels += std::to_string(c.channels[i]);
        }
        return {
            {"cnn.input_size", std::to_string(c.input_size)},
            {"cnn.channels", channels},
            {"cnn.num_classes", std::to_string(c.num_classes)},
        };
    }

    static CnnConfig config_from(const std::map<std::string, std::string>& cfg) {
        CnnConfig c;
        c.input_size = get_int(cfg, "cnn.input_size");
        c.num_classes = get_int(cfg, "cnn.num_classes");
        const auto it = cfg.find("cnn.channels");
        if (it == cfg.end()) throw FormatError("checkpoint config is missing key 'cnn.channels'");
        c.channels.clear();
        std::istringstream in(it->second);
        std::string part;
        while (std::getline(in, part, ',')) c.channels.push_back(std::stoi(part));
        return c;
    }

    CnnModel<float> model_;
};

class RnnClassifier final : public Classifier {
public:
    RnnClassifier(const RnnConfig& cfg, uint64_t seed) : model_(init_rnn<float>(cfg, seed)) {}

    const std::string& arch() const override {
        static const std::string name = "rnn";
        return name;
    }
    uint8_t arch_id() const override { return kArchRnn; }

    Tensor<float> forward(const Tensor<float>& input, Rng*) override {
        return rnn_forward(input, model_);
    }

    ParamList<float> parameters() override { return model_.parameters(); }

    std::map<std::string, std::string> config() const override {
        const RnnConfig& c = model_.cfg;
        return {
            {"rnn.input_dim", std::to_string(c.input_dim)},
            {"rnn.hidden_dim", std::to_string(c.hidden_dim)},
            {"rnn.num_classes", std::to_string(c.num_classes)},
        };
    }

    static RnnConfig config_from(const std::map<std::string, std::string>& cfg) {
        RnnConfig c;
        c.input_dim = get_int(cfg, "rnn.input_dim");
        c.hidden_dim = get_int(cfg, "rnn.hidden_dim");
        c.num_classes = get_int(cfg, "rnn.num_classes");
        return c;
    }

    RnnModel<float> model_;
};

}  // namespace

std::unique_ptr<Classifier> make_classifier(const std::string& arch, const VitConfig& vit_cfg,
                                            uint64_t seed) {
    if (arch == "vit") return std::make_unique<VitClassifier>(vit_cfg, seed);
    if (arch == "cnn") return std::make_unique<CnnClassifier>(CnnConfig{}, seed);
    if (arch == "rnn") return std::make_unique<RnnClassifier>(RnnConfig{}, seed);
    throw ConfigError("unknown architecture '" + arch + "' (expected vit, cnn, or rnn)");
}

std::unique_ptr<Classifier> classifier_from_checkpoint(const Checkpoint& ckpt) {
    std::unique_ptr<Classifier> model;
    switch (ckpt.arch_id) {
        case kArchVit:
            model = std::make_unique<VitClassifier>(VitClassifier::config_from(ckpt.config), 0);
            break;
        case kArchCnn:
            model = std::make_unique<CnnClassifier>(CnnClassifier::config_from(ckpt.config), 0);
            break;
        case kArchRnn:
            model = std::make_unique<RnnClassifier>(RnnClassifier::config_from(ckpt.config), 0);
            break;
        default:
            throw FormatError("unknown architecture id " + std::to_string(ckpt.arch_id));
    }
    restore_params(model->parameters(), ckpt.tensors);
    return model;
}

Checkpoint make_checkpoint(Classifier& model, const std::map<std::string, std::string>& extra) {
    Checkpoint ckpt;
    ckpt.arch_id = model.arch_id();
    ckpt.config = model.config();
    for (const auto& [k, v] : extra) ckpt.config[k] = v;
    for (const auto& p : model.parameters())
        ckpt.tensors.emplace_back(p.name, p.tensor.clone());
    return ckpt;
}

}  // namespace drumscribe
