#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sotmlp/checkpoint.hpp"
#include "sotmlp/config.hpp"
#include "sotmlp/data.hpp"
#include "sotmlp/errors.hpp"
#include "sotmlp/experiment.hpp"

namespace {

using namespace sotmlp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> epochs;
    std::string nonideal;  // "on" / "off" / empty
    std::string out_dir;
    std::string data_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Config file (flat key = value lines)");
    cmd->add_option("--seed", flags.seed, "Override train.seed");
    cmd->add_option("--epochs", flags.epochs, "Override train.epochs");
    cmd->add_option("--nonideal", flags.nonideal, "Override analog.nonideal (on|off)")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--out", flags.out_dir, "Override out.dir");
    cmd->add_option("--data", flags.data_dir, "Override data.dir");
}

// Config file first, then flags; flags win.
ExperimentConfig build_config(const CommonFlags& flags, std::string* echo) {
    ExperimentConfig config;
    if (!flags.config_path.empty())
        config = load_config_file(flags.config_path, echo);
    if (flags.seed)
        apply_config_key(config, "train.seed", std::to_string(*flags.seed));
    if (flags.epochs)
        apply_config_key(config, "train.epochs", std::to_string(*flags.epochs));
    if (!flags.nonideal.empty())
        apply_config_key(config, "analog.nonideal", flags.nonideal);
    if (!flags.out_dir.empty())
        apply_config_key(config, "out.dir", flags.out_dir);
    if (!flags.data_dir.empty())
        apply_config_key(config, "data.dir", flags.data_dir);
    config.validate();
    return config;
}

int cmd_train(const CommonFlags& flags) {
    std::string echo;
    const ExperimentConfig config = build_config(flags, &echo);
    const RunReport report = run_train(config, echo);
    write_run_artifacts(report, config);

    for (std::size_t i = 0; i < report.oracle.epochs.size(); ++i) {
        const EpochRecord& o = report.oracle.epochs[i];
        const EpochRecord& x = report.crossbar.epochs[i];
        std::printf("epoch %u: oracle train %.4f test %.4f loss %.4f | crossbar test %.4f\n",
                    o.epoch, o.train_accuracy, o.test_accuracy, o.mean_loss, x.test_accuracy);
    }
    if (!report.oracle.epochs.empty()) {
        std::printf("final oracle test accuracy = %s\n",
                    format_double(report.oracle.epochs.back().test_accuracy).c_str());
        std::printf("final crossbar test accuracy = %s\n",
                    format_double(report.crossbar.epochs.back().test_accuracy).c_str());
    }
    std::printf("training cycles = %llu\n",
                static_cast<unsigned long long>(report.counter.training_cycles()));
    std::printf("inference cycles = %llu\n",
                static_cast<unsigned long long>(report.counter.inference_cycles()));
    std::printf("wall seconds = %.1f\n", report.wall_seconds);
    std::printf("artifacts -> %s\n", config.out_dir.c_str());
    return kExitOk;
}

int cmd_infer(const CommonFlags& flags, const std::string& checkpoint_path,
              std::optional<std::uint64_t> index, const std::string& images_path) {
    std::string echo;
    const ExperimentConfig config = build_config(flags, &echo);
    if ((index.has_value() ? 1 : 0) + (images_path.empty() ? 0 : 1) != 1)
        throw ConfigError("infer needs exactly one of --index or --images");

    const Checkpoint ck = load_checkpoint(checkpoint_path);

    Matrix images;
    std::vector<std::uint8_t> truth;
    if (index) {
        const Dataset data = load_mnist(resolve_data_dir(config));
        if (*index >= data.test_images.rows)
            throw ConfigError("--index " + std::to_string(*index) + " out of range (test set has " +
                              std::to_string(data.test_images.rows) + " images)");
        images = Matrix(1, data.test_images.cols);
        for (std::size_t c = 0; c < images.cols; ++c)
            images(0, c) = data.test_images(*index, c);
        truth.push_back(data.test_labels[*index]);
    } else {
        images = normalize(load_idx_images(images_path));
    }

    const InferReport rep = run_infer(config, ck, images);
    for (std::size_t i = 0; i < rep.classes.size(); ++i) {
        std::printf("image %zu: class %zu", i, rep.classes[i]);
        if (i < truth.size())
            std::printf(" (label %u)", truth[i]);
        std::printf("\n  activations =");
        for (std::size_t c = 0; c < rep.activations.cols; ++c)
            std::printf(" %.6f", rep.activations(i, c));
        std::printf("\n");
    }
    std::printf("crossbar_cycles = %llu\n", static_cast<unsigned long long>(rep.crossbar_cycles));
    std::printf("gpu_cycles = %llu\n", static_cast<unsigned long long>(rep.gpu_cycles));
    std::printf("speedup = %s\n", format_double(rep.speedup).c_str());
    return kExitOk;
}

int cmd_export_vtc(const CommonFlags& flags, double from, double to, std::size_t points,
                   const std::string& out_file) {
    std::string echo;
    const ExperimentConfig config = build_config(flags, &echo);
    const std::string csv = export_vtc_csv(config, from, to, points);
    const std::string path =
        out_file.empty() ? (std::filesystem::path(config.out_dir) / "vtc.csv").string() : out_file;
    write_file_atomic(path, csv);
    std::printf("%zu rows -> %s\n", points, path.c_str());
    return kExitOk;
}

int cmd_sweep(const CommonFlags& flags, const std::string& param, const std::string& values_csv,
              const std::string& out_file) {
    std::string echo;
    const ExperimentConfig config = build_config(flags, &echo);
    std::vector<std::string> values;
    std::stringstream ss(values_csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            values.push_back(item);
    const std::vector<SweepRow> rows = run_sweep(config, param, values);
    const std::string csv = sweep_csv(param, rows);
    const std::string path =
        out_file.empty() ? (std::filesystem::path(config.out_dir) / "sweep.csv").string() : out_file;
    write_file_atomic(path, csv);
    std::fputs(csv.c_str(), stdout);
    std::printf("-> %s\n", path.c_str());
    return kExitOk;
}

int cmd_report(const CommonFlags& flags) {
    std::string echo;
    const ExperimentConfig config = build_config(flags, &echo);
    const std::string j = hardware_report_json(config);
    write_file_atomic((std::filesystem::path(config.out_dir) / "hardware_report.json").string(), j);
    std::fputs(j.c_str(), stdout);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SOT-MRAM sigmoidal-neuron MLP simulator"};
    app.require_subcommand(1);

    CommonFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "Train the teacher and evaluate oracle + crossbar");
    add_common_flags(train, train_flags);

    CommonFlags infer_flags;
    std::string checkpoint_path = "out/checkpoint.bin";
    std::optional<std::uint64_t> infer_index;
    std::string infer_images;
    CLI::App* infer = app.add_subcommand("infer", "Run the programmed crossbar on images");
    add_common_flags(infer, infer_flags);
    infer->add_option("--checkpoint", checkpoint_path, "Checkpoint file from a train run");
    infer->add_option("--index", infer_index, "Test-set image index");
    infer->add_option("--images", infer_images, "IDX image file to classify");

    CommonFlags vtc_flags;
    double vtc_from = 0.0, vtc_to = 0.8;
    std::size_t vtc_points = 101;
    std::string vtc_out;
    CLI::App* vtc = app.add_subcommand("export-vtc", "Export the neuron voltage transfer curve");
    add_common_flags(vtc, vtc_flags);
    vtc->add_option("--from", vtc_from, "Sweep start, volts");
    vtc->add_option("--to", vtc_to, "Sweep end, volts");
    vtc->add_option("--points", vtc_points, "Number of rows (>= 2)");
    vtc->add_option("--out-file", vtc_out, "CSV path (default <out.dir>/vtc.csv)");

    CommonFlags sweep_flags;
    std::string sweep_param, sweep_values, sweep_out;
    CLI::App* sweep = app.add_subcommand("sweep", "Train once per value of a config key");
    add_common_flags(sweep, sweep_flags);
    sweep->add_option("--param", sweep_param, "Config key to vary (e.g. analog.read_voltage)")
        ->required();
    sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
    sweep->add_option("--out-file", sweep_out, "CSV path (default <out.dir>/sweep.csv)");

    CommonFlags report_flags;
    CLI::App* report = app.add_subcommand("report", "Emit the static hardware summary");
    add_common_flags(report, report_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed())
            return cmd_train(train_flags);
        if (infer->parsed())
            return cmd_infer(infer_flags, checkpoint_path, infer_index, infer_images);
        if (vtc->parsed())
            return cmd_export_vtc(vtc_flags, vtc_from, vtc_to, vtc_points, vtc_out);
        if (sweep->parsed())
            return cmd_sweep(sweep_flags, sweep_param, sweep_values, sweep_out);
        if (report->parsed())
            return cmd_report(report_flags);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
