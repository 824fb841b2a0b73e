#include "drumscribe/train.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "drumscribe/autograd.hpp"
#include "drumscribe/ops.hpp"
#include "drumscribe/rng.hpp"

namespace drumscribe {

namespace {

// Independent RNG streams hanging off the master seed. Values are arbitrary
// but frozen: changing them changes every seeded training run.
constexpr uint64_t kStreamShuffle = 101;
constexpr uint64_t kStreamAugment = 102;
constexpr uint64_t kStreamDropout = 103;
constexpr uint64_t kStreamModelInit = 104;

void format_double(std::string& out, const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    out += buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    return f;
}

}  // namespace

int argmax_lowest(const Tensor<float>& logits) {
    const auto& v = logits.values();
    if (v.empty()) throw ShapeError("argmax: empty logits");
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<int>(best);
}

Tensor<float> augment_input(const Tensor<float>& input, Rng& rng) {
    if (input.rank() != 2)
        throw ShapeError("augment_input: expected a rank-2 input, got " +
                         shape_str(input.shape()));
    const int64_t rows = input.shape()[0];
    const int64_t cols = input.shape()[1];
    const int64_t shift = rng.uniform_int(-10, 10);
    Tensor<float> out = Tensor<float>::zeros(input.shape());
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            const int64_t src = c - shift;
            double v = (src >= 0 && src < cols) ? input(r, src) : 0.0;
            v += rng.normal(0.0, 0.01);
            out(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

std::unique_ptr<Classifier> new_model(const TrainConfig& cfg, const VitConfig& vit_cfg) {
    cfg.validate();
    uint64_t arch_tag = cfg.arch == "vit" ? kArchVit : cfg.arch == "cnn" ? kArchCnn : kArchRnn;
    return make_classifier(cfg.arch, vit_cfg, derive_seed(cfg.seed, kStreamModelInit, arch_tag));
}

TrainResult train(Classifier& model, const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set, const TrainConfig& cfg,
                  const std::map<std::string, std::string>& checkpoint_extra,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw DatasetError("train: the training set is empty");
    for (const auto& ex : train_set) {
        const int label = static_cast<int>(ex.label);
        if (label < 0 || label >= kNumClasses)
            throw DatasetError("train: label " + std::to_string(label) + " out of range in " +
                               ex.source);
    }

    ParamList<float> params = model.parameters();
    AdamState<float> adam;
    TrainResult result;

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, kStreamShuffle, static_cast<uint64_t>(epoch)));
        Rng aug_rng(derive_seed(cfg.seed, kStreamAugment, static_cast<uint64_t>(epoch)));
        Rng drop_rng(derive_seed(cfg.seed, kStreamDropout, static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        int64_t correct = 0;
        int batch_count = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
            Tape<float> tape;
            Tensor<float> loss;
            {
                Tape<float>::Scope scope(tape);
                std::vector<Tensor<float>> rows;
                std::vector<int64_t> labels;
                rows.reserve(stop - start);
                for (size_t i = start; i < stop; ++i) {
                    const LabeledExample& ex = train_set[order[i]];
                    Tensor<float> input =
                        cfg.augment ? augment_input(ex.input, aug_rng) : ex.input;
                    Tensor<float> logits = model.forward(input, &drop_rng);
                    if (argmax_lowest(logits) == static_cast<int>(ex.label)) ++correct;
                    rows.push_back(reshape(logits, {1, static_cast<int64_t>(kNumClasses)}));
                    labels.push_back(static_cast<int64_t>(ex.label));
                }
                loss = cross_entropy_from_logits(concat_rows(rows), labels);
            }
            const double loss_val = loss(0);
            if (!std::isfinite(loss_val))
                throw TrainingDivergedError("training diverged: non-finite loss at epoch " +
                                                std::to_string(epoch) + ", batch " +
                                                std::to_string(batch_count),
                                            epoch, batch_count);
            tape.backward(loss);
            adam_step(params, adam, cfg);
            for (auto& p : params) p.tensor.zero_grad();
            loss_sum += loss_val;
            ++batch_count;
        }

        EpochLog row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(batch_count);
        row.train_acc =
            100.0 * static_cast<double>(correct) / static_cast<double>(train_set.size());
        if (!val_set.empty()) row.val_acc = evaluate(model, val_set).top1_accuracy;
        result.log.push_back(row);

        const double selection = val_set.empty() ? row.train_acc : row.val_acc;
        if (selection > result.best_val_acc) {
            result.best_val_acc = selection;
            result.best_epoch = epoch;
            result.best = make_checkpoint(model, checkpoint_extra);
        }
        if (on_epoch && on_epoch(row)) break;
    }
    return result;
}

EvalReport evaluate(Classifier& model, const std::vector<LabeledExample>& examples) {
    EvalReport report;
    report.total = static_cast<int64_t>(examples.size());
    for (const auto& ex : examples) {
        const int label = static_cast<int>(ex.label);
        if (label < 0 || label >= kNumClasses)
            throw DatasetError("evaluate: label " + std::to_string(label) + " out of range in " +
                               ex.source);
        const int pred = argmax_lowest(model.forward(ex.input));
        ++report.confusion[static_cast<size_t>(label)][static_cast<size_t>(pred)];
    }
    int64_t diag = 0;
    for (int c = 0; c < kNumClasses; ++c) diag += report.confusion[c][c];
    if (report.total > 0)
        report.top1_accuracy =
            100.0 * static_cast<double>(diag) / static_cast<double>(report.total);
    for (int c = 0; c < kNumClasses; ++c) {
        int64_t row_sum = 0, col_sum = 0;
        for (int k = 0; k < kNumClasses; ++k) {
            row_sum += report.confusion[c][k];
            col_sum += report.confusion[k][c];
        }
        report.recall[c] =
            row_sum ? static_cast<double>(report.confusion[c][c]) / static_cast<double>(row_sum)
                    : 0.0;
        report.precision[c] =
            col_sum ? static_cast<double>(report.confusion[c][c]) / static_cast<double>(col_sum)
                    : 0.0;
    }
    return report;
}

BenchResult bench(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set, const TrainConfig& cfg,
                  const VitConfig& vit_cfg, const EpochCallback& on_epoch) {
    // Every run shares the split, master seed, and epoch budget so the
    // comparison is apples to apples.
    static const std::pair<const char*, const char*> kRows[] = {
        {"RNN", "rnn"}, {"CNN", "cnn"}, {"Ours", "vit"}};
    BenchResult result;
    for (const auto& [method, arch] : kRows) {
        TrainConfig run = cfg;
        run.arch = arch;
        std::unique_ptr<Classifier> model = new_model(run, vit_cfg);
        TrainResult trained = train(*model, train_set, val_set, run, {}, on_epoch);
        std::unique_ptr<Classifier> best = classifier_from_checkpoint(trained.best);
        EvalReport report = evaluate(*best, val_set.empty() ? train_set : val_set);
        result.rows.push_back({method, arch, report.top1_accuracy});
        result.logs.push_back(std::move(trained.log));
    }
    return result;
}

std::string format_report(const EvalReport& report) {
    int64_t diag = 0;
    for (int c = 0; c < kNumClasses; ++c) diag += report.confusion[c][c];
    std::string out = "top-1 accuracy: ";
    format_double(out, "%.2f", report.top1_accuracy);
    out += "% (" + std::to_string(diag) + "/" + std::to_string(report.total) + ")\n\n";

    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-11s %9s %9s\n", "class", "precision", "recall");
    out += buf;
    for (int c = 0; c < kNumClasses; ++c) {
        std::snprintf(buf, sizeof(buf), "%-11s %9.4f %9.4f\n", class_name(static_cast<DrumClass>(c)).c_str(),
                      report.precision[c], report.recall[c]);
        out += buf;
    }

    out += "\nconfusion (rows true, cols predicted):\n";
    std::snprintf(buf, sizeof(buf), "%-11s", "");
    out += buf;
    for (int c = 0; c < kNumClasses; ++c) {
        std::snprintf(buf, sizeof(buf), " %10s", class_name(static_cast<DrumClass>(c)).c_str());
        out += buf;
    }
    out += "\n";
    for (int r = 0; r < kNumClasses; ++r) {
        std::snprintf(buf, sizeof(buf), "%-11s", class_name(static_cast<DrumClass>(r)).c_str());
        out += buf;
        for (int c = 0; c < kNumClasses; ++c) {
            std::snprintf(buf, sizeof(buf), " %10" PRId64, report.confusion[r][c]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
    std::string out = "Method | Accuracy(Top1%)\n";
    char buf[64];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-6s | %15.2f\n", row.method.c_str(), row.top1);
        out += buf;
    }
    return out;
}

void write_loss_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream f = open_csv(path);
    f << "epoch,train_loss,train_acc,val_acc\n";
    for (const auto& row : log) {
        std::string line = std::to_string(row.epoch);
        line += ",";
        format_double(line, "%.6f", row.train_loss);
        line += ",";
        format_double(line, "%.6f", row.train_acc);
        line += ",";
        format_double(line, "%.6f", row.val_acc);
        f << line << "\n";
    }
    if (!f) throw IoError("failed to write " + path.string());
}

void write_metrics_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream f = open_csv(path);
    f << "class,precision,recall\n";
    for (int c = 0; c < kNumClasses; ++c) {
        std::string line = class_name(static_cast<DrumClass>(c));
        line += ",";
        format_double(line, "%.6f", report.precision[c]);
        line += ",";
        format_double(line, "%.6f", report.recall[c]);
        f << line << "\n";
    }
    if (!f) throw IoError("failed to write " + path.string());
}

void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream f = open_csv(path);
    f << "true_class";
    for (int c = 0; c < kNumClasses; ++c) f << "," << class_name(static_cast<DrumClass>(c));
    f << "\n";
    for (int r = 0; r < kNumClasses; ++r) {
        f << class_name(static_cast<DrumClass>(r));
        for (int c = 0; c < kNumClasses; ++c) f << "," << report.confusion[r][c];
        f << "\n";
    }
    if (!f) throw IoError("failed to write " + path.string());
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
    std::ofstream f = open_csv(path);
    f << "method,accuracy_top1\n";
    for (const auto& row : rows) {
        std::string line = row.method;
        line += ",";
        format_double(line, "%.4f", row.top1);
        f << line << "\n";
    }
    if (!f) throw IoError("failed to write " + path.string());
}

}  // namespace drumscribe
