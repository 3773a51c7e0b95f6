#include "sotmlp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "sotmlp/analog.hpp"
#include "sotmlp/errors.hpp"

namespace sotmlp {

namespace {

using nlohmann::json;

std::size_t argmax_row(const Matrix& m, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols; ++c)
        if (m(r, c) > m(r, best))
            best = c;
    return best;
}

json metrics_json(const Metrics& m) {
    json rows = json::array();
    for (const EpochRecord& rec : m.epochs) {
        rows.push_back({{"epoch", rec.epoch},
                        {"train_accuracy", rec.train_accuracy},
                        {"test_accuracy", rec.test_accuracy},
                        {"mean_loss", rec.mean_loss}});
    }
    json confusion = json::array();
    for (std::size_t r = 0; r < m.confusion.rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.confusion.cols; ++c)
            row.push_back(m.confusion(r, c));
        confusion.push_back(row);
    }
    return {{"epochs", rows}, {"final_confusion", confusion}};
}

json power_area_json(const PowerAreaReport& pa) {
    return {{"neuron_count", pa.neuron_count},
            {"per_neuron_power_w", pa.per_neuron_power},
            {"per_neuron_area_m2", pa.per_neuron_area},
            {"total_power_w", pa.total_power},
            {"total_area_m2", pa.total_area}};
}

json signals_json(ArrayOp op) {
    const ControlSignals s = signal_table(op);
    return {{"wwl", level_name(s.wwl)},
            {"rwl", level_name(s.rwl)},
            {"bl", level_name(s.bl)},
            {"sl", level_name(s.sl)},
            {"in", level_name(s.in)}};
}

} // namespace

std::string resolve_data_dir(const ExperimentConfig& config) {
    if (!config.data_dir.empty())
        return config.data_dir;
    if (const char* env = std::getenv("SOTMLP_DATA"); env && *env)
        return env;
    return "data/mnist";
}

EvalResult evaluate_pipeline(MlpPipeline& p, const Matrix& images,
                             const std::vector<std::uint8_t>& labels) {
    if (images.rows != labels.size())
        throw DimensionError("evaluate_pipeline: image and label counts differ");
    const std::size_t classes = p.output_size();
    EvalResult res;
    res.confusion = Matrix(classes, classes);
    const BatchInferenceResult batch = pipeline_infer_batch(p, images);
    std::size_t correct = 0;
    double loss_sum = 0.0;
    std::vector<double> o(classes), t(classes);
    for (std::size_t i = 0; i < images.rows; ++i) {
        o.assign(batch.outputs.row(i), batch.outputs.row(i) + classes);
        const std::size_t pred = argmax_row(batch.outputs, i);
        const std::size_t truth = labels[i];
        if (truth >= classes)
            throw ValidationError("evaluate_pipeline: label exceeds class count");
        res.confusion(truth, pred) += 1.0;
        if (pred == truth)
            ++correct;
        std::fill(t.begin(), t.end(), 0.0);
        t[truth] = 1.0;
        loss_sum += loss(o, t);
    }
    res.accuracy = images.rows ? static_cast<double>(correct) / static_cast<double>(images.rows) : 0.0;
    res.mean_loss = images.rows ? loss_sum / static_cast<double>(images.rows) : 0.0;
    return res;
}

RunReport run_train(const ExperimentConfig& config, const std::string& config_echo) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const Dataset data = load_mnist(resolve_data_dir(config));
    if (data.train_images.cols != config.topology.front())
        throw ConfigError("topology input size " + std::to_string(config.topology.front()) +
                          " does not match image size " + std::to_string(data.train_images.cols));

    Rng rng(config.train.rng_seed);
    TeacherNet teacher = init_teacher(config.topology, rng);

    auto device = std::make_shared<const DeviceParams>(config.device);
    MlpPipeline pipeline =
        build_pipeline(config.topology, device, config.read_voltage, config.nonideal);

    RunReport report;
    report.config_echo = config_echo;
    report.effective_config = serialize_config(config);

    for (std::uint32_t epoch = 1; epoch <= config.train.epochs; ++epoch) {
        EpochRecord oracle_rec = train_epoch(teacher, config.train, data, rng, epoch);
        report.oracle.epochs.push_back(oracle_rec);

        const StudentView student = snapshot_student_deterministic(teacher, config.train.delta_b);
        map_to_crossbar(student, pipeline);
        EpochRecord xbar_rec;
        xbar_rec.epoch = epoch;
        xbar_rec.train_accuracy =
            evaluate_pipeline(pipeline, data.train_images, data.train_labels).accuracy;
        EvalResult xbar_test = evaluate_pipeline(pipeline, data.test_images, data.test_labels);
        xbar_rec.test_accuracy = xbar_test.accuracy;
        xbar_rec.mean_loss = xbar_test.mean_loss;
        report.crossbar.epochs.push_back(xbar_rec);
        if (epoch == config.train.epochs) {
            const StudentView final_student =
                snapshot_student_deterministic(teacher, config.train.delta_b);
            report.oracle.confusion =
                evaluate(final_student, data.test_images, data.test_labels).confusion;
            report.crossbar.confusion = xbar_test.confusion;
        }
    }

    report.counter = pipeline.counter;
    report.power_area =
        power_area_report(pipeline, config.per_neuron_power, config.per_neuron_area);
    report.checkpoint.topology = config.topology;
    report.checkpoint.teacher = std::move(teacher);
    report.checkpoint.binarization = config.train.binarization;
    report.checkpoint.delta_b = config.train.delta_b;

    const auto t1 = std::chrono::steady_clock::now();
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    return report;
}

std::string metrics_csv(const Metrics& m) {
    std::string out = "epoch,train_accuracy,test_accuracy,mean_loss\n";
    for (const EpochRecord& rec : m.epochs) {
        out += std::to_string(rec.epoch);
        out += ',';
        out += format_double(rec.train_accuracy);
        out += ',';
        out += format_double(rec.test_accuracy);
        out += ',';
        out += format_double(rec.mean_loss);
        out += '\n';
    }
    return out;
}

std::string run_report_json(const RunReport& report, const ExperimentConfig& config) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "train_run";
    j["topology"] = config.topology;
    j["oracle"] = metrics_json(report.oracle);
    j["crossbar"] = metrics_json(report.crossbar);
    j["cycles"] = {{"training", report.counter.training_cycles()},
                   {"inference", report.counter.inference_cycles()}};
    j["gpu_baseline"] = {{"cycles_per_image", config.gpu_cycles_per_image},
                         {"speedup_single_inference", config.gpu_cycles_per_image}};
    j["power_area"] = power_area_json(report.power_area);
    j["config_echo"] = report.config_echo;
    j["effective_config"] = report.effective_config;
    j["wall_seconds"] = report.wall_seconds;
    return j.dump(2) + "\n";
}

void write_run_artifacts(const RunReport& report, const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    const fs::path out(config.out_dir);
    write_file_atomic((out / "metrics_oracle.csv").string(), metrics_csv(report.oracle));
    write_file_atomic((out / "metrics_crossbar.csv").string(), metrics_csv(report.crossbar));
    write_file_atomic((out / "config_echo.txt").string(), report.config_echo);
    write_file_atomic((out / "effective_config.txt").string(), report.effective_config);
    write_file_atomic((out / "report.json").string(), run_report_json(report, config));
    save_checkpoint((out / "checkpoint.bin").string(), report.checkpoint);
}

InferReport run_infer(const ExperimentConfig& config, const Checkpoint& ck, const Matrix& images) {
    config.device.validate();
    if (ck.topology.empty())
        throw ValidationError("checkpoint has no topology");
    if (images.cols != ck.topology.front())
        throw DimensionError("image width " + std::to_string(images.cols) +
                             " does not match network input " +
                             std::to_string(ck.topology.front()));

    auto device = std::make_shared<const DeviceParams>(config.device);
    MlpPipeline pipeline =
        build_pipeline(ck.topology, device, config.read_voltage, config.nonideal);
    map_to_crossbar(snapshot_student_deterministic(ck.teacher, ck.delta_b), pipeline);

    const std::uint64_t before = pipeline.counter.inference_cycles();
    const BatchInferenceResult batch = pipeline_infer_batch(pipeline, images);

    InferReport rep;
    rep.activations = batch.outputs;
    rep.classes.reserve(images.rows);
    for (std::size_t i = 0; i < images.rows; ++i)
        rep.classes.push_back(argmax_row(batch.outputs, i));
    rep.crossbar_cycles = pipeline.counter.inference_cycles() - before;
    rep.gpu_cycles = gpu_cycle_estimate(images.rows, config.gpu_cycles_per_image);
    rep.speedup = rep.crossbar_cycles
                      ? static_cast<double>(rep.gpu_cycles) / static_cast<double>(rep.crossbar_cycles)
                      : 0.0;
    return rep;
}

std::string export_vtc_csv(const ExperimentConfig& config, double lo, double hi,
                           std::size_t points) {
    if (points < 2)
        throw ConfigError("vtc export needs at least 2 points");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        throw ConfigError("vtc range must satisfy lo < hi");
    config.device.validate();

    auto device = std::make_shared<const DeviceParams>(config.device);
    NeuronCircuit n;
    n.cell_p = MtjCell{device, MagState::Parallel};
    n.cell_ap = MtjCell{device, MagState::AntiParallel};
    n.validate();

    std::string out;
    for (std::size_t i = 0; i < points; ++i) {
        const double v_in =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        const VtcPoint p = neuron_vtc_divider(n, v_in);
        out += format_double(v_in);
        out += ',';
        out += format_double(p.v_out);
        out += '\n';
    }
    return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& key,
                                const std::vector<std::string>& values) {
    if (values.empty())
        throw ConfigError("sweep needs at least one value");
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (const std::string& value : values) {
        ExperimentConfig config = base;
        apply_config_key(config, key, value);
        const RunReport report = run_train(config, /*config_echo=*/"");
        SweepRow row;
        row.value = value;
        if (!report.oracle.epochs.empty()) {
            row.oracle_test_accuracy = report.oracle.epochs.back().test_accuracy;
            row.crossbar_test_accuracy = report.crossbar.epochs.back().test_accuracy;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_csv(const std::string& key, const std::vector<SweepRow>& rows) {
    std::string out = key + ",oracle_test_accuracy,crossbar_test_accuracy\n";
    for (const SweepRow& row : rows) {
        out += row.value;
        out += ',';
        out += format_double(row.oracle_test_accuracy);
        out += ',';
        out += format_double(row.crossbar_test_accuracy);
        out += '\n';
    }
    return out;
}

std::string hardware_report_json(const ExperimentConfig& config) {
    config.validate();
    auto device = std::make_shared<const DeviceParams>(config.device);
    MlpPipeline pipeline =
        build_pipeline(config.topology, device, config.read_voltage, config.nonideal);

    std::uint64_t programming_cycles = 0;
    for (const CrossbarLayer& layer : pipeline.layers)
        programming_cycles += layer.out_nodes();

    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "hardware_report";
    j["topology"] = config.topology;
    j["signal_table"] = {{"train_plus", signals_json(ArrayOp::TrainPlus)},
                         {"train_minus", signals_json(ArrayOp::TrainMinus)},
                         {"inference", signals_json(ArrayOp::Inference)}};
    j["cycle_model"] = {{"programming_cycles_full_pipeline", programming_cycles},
                        {"cycles_per_inference", 1},
                        {"gpu_cycles_per_image", config.gpu_cycles_per_image}};
    j["power_area"] =
        power_area_json(power_area_report(pipeline, config.per_neuron_power, config.per_neuron_area));
    j["device"] = {{"r_parallel_ohm", resistance(*device, MagState::Parallel, 0.0)},
                   {"r_antiparallel_ohm", resistance(*device, MagState::AntiParallel, 0.0)},
                   {"tmr_zero_bias", tmr(*device, 0.0)}};
    return j.dump(2) + "\n";
}

} // namespace sotmlp
