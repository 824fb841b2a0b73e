#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drumscribe/audio.hpp"
#include "drumscribe/checkpoint.hpp"
#include "drumscribe/classifier.hpp"
#include "drumscribe/config.hpp"
#include "drumscribe/data.hpp"
#include "drumscribe/dsp.hpp"
#include "drumscribe/errors.hpp"
#include "drumscribe/ops.hpp"
#include "drumscribe/pgm.hpp"
#include "drumscribe/train.hpp"

namespace fs = std::filesystem;
using namespace drumscribe;

namespace {

struct CommonOpts {
    std::string config_file;
    std::vector<std::string> sets;
};

void add_config_opts(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_file, "Config file of section.key = value lines");
    cmd->add_option("--set", opts.sets, "Override one config value, e.g. --set train.epochs=40");
}

KvConfig load_config(const CommonOpts& opts) {
    KvConfig cfg =
        opts.config_file.empty() ? KvConfig{} : KvConfig::from_file(opts.config_file);
    for (const auto& s : opts.sets) cfg.set_from_assignment(s);
    return cfg;
}

/// Same layering, but keys stored in a checkpoint fill any gap left by the
/// file, and --set still wins. Keeps eval/classify featurization consistent
/// with how the model was trained unless the user explicitly overrides it.
KvConfig load_config(const CommonOpts& opts, const Checkpoint& ckpt) {
    KvConfig cfg =
        opts.config_file.empty() ? KvConfig{} : KvConfig::from_file(opts.config_file);
    for (const auto& [key, value] : ckpt.config)
        if (key.rfind("dsp.", 0) == 0 && !cfg.has(key)) cfg.set(key, value);
    for (const auto& s : opts.sets) cfg.set_from_assignment(s);
    return cfg;
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::map<std::string, std::string> dsp_config_map(const DspConfig& dsp) {
    return {
        {"dsp.n_fft", std::to_string(dsp.n_fft)},
        {"dsp.hop", std::to_string(dsp.hop)},
        {"dsp.n_mels", std::to_string(dsp.n_mels)},
        {"dsp.f_min", format_g(dsp.f_min)},
        {"dsp.f_max", format_g(dsp.f_max)},
        {"dsp.sample_rate", std::to_string(dsp.sample_rate)},
        {"dsp.top_db", format_g(dsp.top_db)},
    };
}

EpochCallback progress_printer(bool quiet) {
    if (quiet) return nullptr;
    return [](const EpochLog& row) {
        std::fprintf(stderr, "epoch %4d  loss %.4f  train %6.2f%%  val %6.2f%%\n", row.epoch,
                     row.train_loss, row.train_acc, row.val_acc);
        return false;
    };
}

int cmd_synth(const std::string& out_dir, int per_class, uint64_t seed) {
    const auto counts = generate_dataset(per_class, seed, out_dir);
    for (int c = 0; c < kNumClasses; ++c)
        std::printf("%s: %d\n", class_name(static_cast<DrumClass>(c)).c_str(), counts[c]);
    return 0;
}

int cmd_featurize(const std::string& in_dir, const std::string& out_dir,
                  const CommonOpts& common) {
    const DspConfig dsp = load_config(common).dsp();
    if (!fs::is_directory(in_dir)) throw IoError("featurize: " + in_dir + " is not a directory");

    std::vector<fs::path> wavs;
    for (const auto& entry : fs::recursive_directory_iterator(in_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            wavs.push_back(entry.path());
    std::sort(wavs.begin(), wavs.end());

    for (const auto& wav : wavs) {
        const fs::path rel = fs::relative(wav, in_dir);
        fs::path out_path = fs::path(out_dir) / rel;
        out_path.replace_extension(".mspc");
        fs::create_directories(out_path.parent_path());
        write_mspc(featurize_clip(read_wav(wav), dsp), out_path);
    }
    std::printf("featurized %zu files\n", wavs.size());
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& arch, const std::string& out_path,
              const std::string& loss_csv, double val_fraction, bool quiet,
              const CommonOpts& common) {
    KvConfig kv = load_config(common);
    TrainConfig cfg = kv.train();
    if (!arch.empty()) cfg.arch = arch;
    cfg.validate();
    const DspConfig dsp = kv.dsp();
    const VitConfig vit_cfg = kv.vit();

    const auto examples = load_examples(data_dir, dsp);
    std::vector<LabeledExample> train_set, val_set;
    split(examples, val_fraction, cfg.seed, train_set, val_set);

    auto model = new_model(cfg, vit_cfg);
    TrainResult result =
        train(*model, train_set, val_set, cfg, dsp_config_map(dsp), progress_printer(quiet));

    save_checkpoint(result.best, out_path);
    const std::string csv_path = loss_csv.empty() ? out_path + ".loss.csv" : loss_csv;
    write_loss_csv(result.log, csv_path);
    std::printf("best val accuracy %.2f%% at epoch %d; checkpoint written to %s\n",
                result.best_val_acc, result.best_epoch, out_path.c_str());
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& csv_prefix, const CommonOpts& common) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const DspConfig dsp = load_config(common, ckpt).dsp();
    auto model = classifier_from_checkpoint(ckpt);
    const EvalReport report = evaluate(*model, load_examples(data_dir, dsp));
    std::fputs(format_report(report).c_str(), stdout);
    if (!csv_prefix.empty()) {
        write_metrics_csv(report, csv_prefix + ".metrics.csv");
        write_confusion_csv(report, csv_prefix + ".confusion.csv");
    }
    return 0;
}

int cmd_classify(const std::string& model_path, const std::string& wav_path,
                 const CommonOpts& common) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const DspConfig dsp = load_config(common, ckpt).dsp();
    auto model = classifier_from_checkpoint(ckpt);

    const Tensor<float> input = featurize_clip(read_wav(wav_path), dsp);
    const Tensor<float> logits = model->forward(input);
    const Tensor<float> probs = softmax(reshape(logits, {1, logits.size()}), 1);
    const int pred = argmax_lowest(logits);

    std::printf("%s\n", class_name(static_cast<DrumClass>(pred)).c_str());
    for (int c = 0; c < kNumClasses && c < logits.size(); ++c)
        std::printf("%-11s %.4f\n", class_name(static_cast<DrumClass>(c)).c_str(),
                    static_cast<double>(probs(0, c)));
    return 0;
}

int cmd_bench(const std::string& data_dir, const std::string& csv_path, double val_fraction,
              bool quiet, const CommonOpts& common) {
    KvConfig kv = load_config(common);
    const TrainConfig cfg = kv.train();
    const DspConfig dsp = kv.dsp();
    const VitConfig vit_cfg = kv.vit();

    const auto examples = load_examples(data_dir, dsp);
    std::vector<LabeledExample> train_set, val_set;
    split(examples, val_fraction, cfg.seed, train_set, val_set);

    const BenchResult result = bench(train_set, val_set, cfg, vit_cfg, progress_printer(quiet));
    std::fputs(format_bench_table(result.rows).c_str(), stdout);
    if (!csv_path.empty()) write_bench_csv(result.rows, csv_path);
    return 0;
}

int cmd_plot(const std::string& in_path, const std::string& out_path, const CommonOpts& common) {
    const DspConfig dsp = load_config(common).dsp();
    const AudioClip clip = resample_linear(read_wav(in_path), dsp.sample_rate);
    write_pgm(normalized_db(mel_spectrogram(clip, dsp)), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drum-hit synthesis, spectrogram, and transcription toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic drum-hit dataset");
    std::string synth_out;
    int synth_per_class = 10;
    uint64_t synth_seed = 1;
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    synth->add_option("--per-class", synth_per_class, "WAV files per class");
    synth->add_option("--seed", synth_seed, "Master dataset seed");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "Convert WAV trees to MSPC1 spectrograms");
    std::string feat_in, feat_out;
    CommonOpts feat_common;
    featurize->add_option("--in", feat_in, "Input directory of WAV files")->required();
    featurize->add_option("--out", feat_out, "Output directory (tree mirrored)")->required();
    add_config_opts(featurize, feat_common);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on a dataset directory");
    std::string train_data, train_arch, train_out, train_loss_csv;
    double train_val_fraction = 1.0 / 3.0;
    bool train_quiet = false;
    CommonOpts train_common;
    train_cmd->add_option("--data", train_data, "Dataset directory (class subdirectories)")
        ->required();
    train_cmd->add_option("--arch", train_arch, "Architecture: vit, cnn, or rnn")
        ->check(CLI::IsMember({"vit", "cnn", "rnn"}));
    train_cmd->add_option("--out", train_out, "Checkpoint output path")->required();
    train_cmd->add_option("--loss-csv", train_loss_csv,
                          "Loss log path (default: <out>.loss.csv)");
    train_cmd->add_option("--val-fraction", train_val_fraction,
                          "Fraction of each class held out for validation");
    train_cmd->add_flag("--quiet", train_quiet, "Suppress per-epoch progress on stderr");
    add_config_opts(train_cmd, train_common);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
    std::string eval_model, eval_data, eval_csv;
    CommonOpts eval_common;
    eval_cmd->add_option("--model", eval_model, "Checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--csv", eval_csv, "Prefix for .metrics.csv and .confusion.csv");
    add_config_opts(eval_cmd, eval_common);

    // classify
    auto* classify = app.add_subcommand("classify", "Classify a single WAV file");
    std::string classify_model, classify_wav;
    CommonOpts classify_common;
    classify->add_option("--model", classify_model, "Checkpoint path")->required();
    classify->add_option("file", classify_wav, "WAV file to classify")->required();
    add_config_opts(classify, classify_common);

    // bench
    auto* bench_cmd =
        app.add_subcommand("bench", "Train and compare rnn, cnn, and vit on one split");
    std::string bench_data, bench_csv;
    double bench_val_fraction = 1.0 / 3.0;
    bool bench_quiet = false;
    CommonOpts bench_common;
    bench_cmd->add_option("--data", bench_data, "Dataset directory")->required();
    bench_cmd->add_option("--csv", bench_csv, "Also write the table as CSV");
    bench_cmd->add_option("--val-fraction", bench_val_fraction,
                          "Fraction of each class held out for validation");
    bench_cmd->add_flag("--quiet", bench_quiet, "Suppress per-epoch progress on stderr");
    add_config_opts(bench_cmd, bench_common);

    // plot
    auto* plot = app.add_subcommand("plot", "Render a WAV's Mel spectrogram as a PGM image");
    std::string plot_in, plot_out;
    CommonOpts plot_common;
    plot->add_option("--in", plot_in, "Input WAV file")->required();
    plot->add_option("--out", plot_out, "Output PGM path")->required();
    add_config_opts(plot, plot_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_out, synth_per_class, synth_seed);
        if (featurize->parsed()) return cmd_featurize(feat_in, feat_out, feat_common);
        if (train_cmd->parsed())
            return cmd_train(train_data, train_arch, train_out, train_loss_csv,
                             train_val_fraction, train_quiet, train_common);
        if (eval_cmd->parsed()) return cmd_eval(eval_model, eval_data, eval_csv, eval_common);
        if (classify->parsed()) return cmd_classify(classify_model, classify_wav, classify_common);
        if (bench_cmd->parsed())
            return cmd_bench(bench_data, bench_csv, bench_val_fraction, bench_quiet, bench_common);
        if (plot->parsed()) return cmd_plot(plot_in, plot_out, plot_common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
